use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the total Hilbert-space dimension handled densely.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Party structure of a multipartite system.
///
/// Basis index `i = Σ_k i_k · Π_{m>k} d_m`: party 0 is the most significant
/// digit. Every module relies on this ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SystemShape {
    local_dims: Vec<usize>,
    total_dim: usize,
}

impl SystemShape {
    pub fn new(local_dims: Vec<usize>) -> Result<Self> {
        if local_dims.is_empty() {
            return Err(Error::validation("a system needs at least one party"));
        }
        if let Some(k) = local_dims.iter().position(|&d| d == 0) {
            return Err(Error::validation(format!("party {k} has local dimension 0")));
        }
        let total_dim = local_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= MAX_TOTAL_DIM)
            .ok_or_else(|| {
                Error::unsupported(format!(
                    "total dimension of {local_dims:?} exceeds {MAX_TOTAL_DIM}"
                ))
            })?;
        Ok(Self { local_dims, total_dim })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Self {
        Self::new(vec![2; n]).expect("qubit register within dimension limits")
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn parties(&self) -> usize {
        self.local_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn dim(&self, party: usize) -> usize {
        self.local_dims[party]
    }

    /// Product of the local dimensions of all parties after `party`.
    pub fn stride(&self, party: usize) -> usize {
        self.local_dims[party + 1..].iter().product()
    }

    /// Shape of `self` followed by `other`.
    pub fn concat(&self, other: &SystemShape) -> Result<Self> {
        let mut dims = self.local_dims.clone();
        dims.extend_from_slice(&other.local_dims);
        Self::new(dims)
    }

    /// Shape of the listed parties, in the order given.
    pub fn select(&self, parties: &[usize]) -> Result<Self> {
        self.check_parties(parties)?;
        Self::new(parties.iter().map(|&k| self.local_dims[k]).collect())
    }

    pub fn is_qubits(&self, n: usize) -> bool {
        self.parties() == n && self.local_dims.iter().all(|&d| d == 2)
    }

    /// Digits of a flat basis index.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.parties()];
        for k in (0..self.parties()).rev() {
            digits[k] = index % self.local_dims[k];
            index /= self.local_dims[k];
        }
        digits
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.local_dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub(crate) fn check_parties(&self, parties: &[usize]) -> Result<()> {
        for (pos, &k) in parties.iter().enumerate() {
            if k >= self.parties() {
                return Err(Error::validation(format!(
                    "party index {k} out of range for {} parties",
                    self.parties()
                )));
            }
            if parties[..pos].contains(&k) {
                return Err(Error::validation(format!("party index {k} repeated")));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for SystemShape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SystemShape> for Vec<usize> {
    fn from(shape: SystemShape) -> Self {
        shape.local_dims
    }
}

impl std::fmt::Display for SystemShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.local_dims)
    }
}

/// Split of all parties of a shape into two nonempty groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Bipartition {
    pub fn new(shape: &SystemShape, left: Vec<usize>, right: Vec<usize>) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::validation("both sides of a cut must be nonempty"));
        }
        let mut all = left.clone();
        all.extend_from_slice(&right);
        shape.check_parties(&all)?;
        if all.len() != shape.parties() {
            return Err(Error::validation(format!(
                "cut {left:?}|{right:?} does not cover all {} parties",
                shape.parties()
            )));
        }
        Ok(Self { left, right })
    }

    /// The cut `{0} | {1}` of a two-party system.
    pub fn two_party() -> Self {
        Self { left: vec![0], right: vec![1] }
    }

    /// Parses `"0,1|2"` (zero-based party indices).
    pub fn parse(shape: &SystemShape, text: &str) -> Result<Self> {
        let (l, r) = text
            .split_once('|')
            .ok_or_else(|| Error::validation(format!("cut '{text}' has no '|' separator")))?;
        let parse_side = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::validation(format!("bad party index '{t}' in cut")))
                })
                .collect()
        };
        Self::new(shape, parse_side(l)?, parse_side(r)?)
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn left_dim(&self, shape: &SystemShape) -> usize {
        self.left.iter().map(|&k| shape.dim(k)).product()
    }

    pub fn right_dim(&self, shape: &SystemShape) -> usize {
        self.right.iter().map(|&k| shape.dim(k)).product()
    }

    pub(crate) fn validate_for(&self, shape: &SystemShape) -> Result<()> {
        Self::new(shape, self.left.clone(), self.right.clone()).map(|_| ())
    }

    /// Maps a flat index of `shape` to (left index, right index).
    pub(crate) fn split_index(&self, shape: &SystemShape, index: usize) -> (usize, usize) {
        let digits = shape.multi_index(index);
        let fold = |side: &[usize]| side.iter().fold(0, |acc, &k| acc * shape.dim(k) + digits[k]);
        (fold(&self.left), fold(&self.right))
    }
}
