//! Local noise channels.
//!
//! A party's most general interaction with a private environment sends
//! `|i>|0>_E` to `Σ_j |j>|e_ij>_E`; only the Gram matrix of the `d²`
//! environment vectors matters. Channels are stored as Kraus sets and the
//! Gram form is offered as a constructor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{self, MatrixJson};
use crate::qcore::linalg::{cr, completeness_residual, hermitian_eigen, identity, max_abs_diff};
use crate::qcore::ops::kraus_conjugate;
use crate::qcore::random::{haar_isometry, rng_from_seed, SeededRng};
use crate::qcore::{CMatrix, DensityMatrix, SystemShape, C64};

/// Completeness tolerance for channels built in memory.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Completeness tolerance for channels loaded from files, and the
/// positivity / trace-preservation tolerance for Gram inputs.
pub const LOAD_TOL: f64 = 1e-7;

/// Gram eigenvalues at or below this are clipped to zero before factoring.
const GRAM_CLIP: f64 = 1e-12;

/// A CPTP map on one `dim`-level party, `ρ ↦ Σ_m K_m ρ K_m†`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl LocalChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(kraus, COMPLETENESS_TOL)
    }

    fn with_tolerance(kraus: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let dim = kraus
            .first()
            .ok_or_else(|| Error::validation("channel needs at least one Kraus operator"))?
            .nrows();
        if dim == 0 {
            return Err(Error::validation("channel dimension must be at least 1"));
        }
        if kraus.len() > dim * dim {
            return Err(Error::validation(format!(
                "{} Kraus operators exceed d² = {}",
                kraus.len(),
                dim * dim
            )));
        }
        if let Some(k) = kraus.iter().position(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::shape(format!("Kraus operator {k} is not {dim}x{dim}")));
        }
        let res = completeness_residual(&kraus, dim);
        if res.is_nan() || res > tol {
            return Err(Error::validation(format!(
                "Kraus set violates completeness Σ K†K = I (residual {res:e})"
            )));
        }
        Ok(Self { dim, kraus })
    }

    pub(crate) fn from_kraus_unchecked(dim: usize, kraus: Vec<CMatrix>) -> Self {
        Self { dim, kraus }
    }

    pub fn identity(d: usize) -> Self {
        Self { dim: d, kraus: vec![identity(d)] }
    }

    /// Identity channel written with `env_dim` Kraus operators, all but the
    /// first zero.
    pub fn identity_padded(d: usize, env_dim: usize) -> Result<Self> {
        check_env_dim(d, env_dim)?;
        let mut kraus = vec![CMatrix::zeros(d, d); env_dim];
        kraus[0] = identity(d);
        Ok(Self { dim: d, kraus })
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn env_dim(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(&self.kraus, self.dim)
    }

    /// Stinespring isometry: the Kraus operators stacked vertically into a
    /// `(d·e) × d` matrix.
    pub fn isometry(&self) -> CMatrix {
        let d = self.dim;
        let mut v = CMatrix::zeros(d * self.kraus.len(), d);
        for (m, k) in self.kraus.iter().enumerate() {
            v.view_mut((m * d, 0), (d, d)).copy_from(k);
        }
        v
    }

    /// Inverse of [`Self::isometry`]; `v` must have orthonormal columns.
    pub fn from_isometry(d: usize, v: &CMatrix) -> Result<Self> {
        if v.ncols() != d || !v.nrows().is_multiple_of(d) || v.nrows() == 0 {
            return Err(Error::shape(format!(
                "{}x{} matrix is not a stacked Kraus isometry for d = {d}",
                v.nrows(),
                v.ncols()
            )));
        }
        let kraus = (0..v.nrows() / d)
            .map(|m| v.view((m * d, 0), (d, d)).into_owned())
            .collect();
        Self::new(kraus)
    }

    /// Action on a single-party operator.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &LocalChannel) -> Result<LocalChannel> {
        if self.dim != inner.dim {
            return Err(Error::shape("composing channels of different dimensions"));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * inner.kraus.len());
        for a in &self.kraus {
            for b in &inner.kraus {
                kraus.push(a * b);
            }
        }
        // re-factor through the Gram matrix to stay within d² operators
        let product = LocalChannel { dim: self.dim, kraus };
        channel_from_environment_gram(&EnvironmentGram::from_channel(&product))
    }

    pub fn adjoint(&self) -> AdjointChannel {
        AdjointChannel { dim: self.dim, kraus: self.kraus.clone() }
    }
}

/// Heisenberg-picture map `X ↦ Σ_m K_m† X K_m`; unital when the channel is
/// trace preserving.
#[derive(Debug, Clone)]
pub struct AdjointChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl AdjointChannel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k.adjoint() * x * k;
        }
        out
    }

    /// Kraus operators of the adjoint written as a map `X ↦ Σ A X A†`.
    pub(crate) fn conjugating_operators(&self) -> Vec<CMatrix> {
        self.kraus.iter().map(|k| k.adjoint()).collect()
    }
}

fn check_env_dim(d: usize, env_dim: usize) -> Result<()> {
    if env_dim == 0 || env_dim > d * d {
        return Err(Error::validation(format!(
            "environment dimension {env_dim} outside 1..={}",
            d * d
        )));
    }
    Ok(())
}

fn check_party_dims(channels: &[LocalChannel], shape: &SystemShape) -> Result<()> {
    if channels.len() != shape.parties() {
        return Err(Error::shape(format!(
            "{} channels for {} parties",
            channels.len(),
            shape.parties()
        )));
    }
    for (k, ch) in channels.iter().enumerate() {
        if ch.dim != shape.dim(k) {
            return Err(Error::shape(format!(
                "channel for party {k} has dimension {} but the party has {}",
                ch.dim,
                shape.dim(k)
            )));
        }
    }
    Ok(())
}

/// `(Λ_1 ⊗ … ⊗ Λ_n)(m)` for an operator `m` over `shape`.
pub(crate) fn product_channel_matrix(
    shape: &SystemShape,
    channels: &[LocalChannel],
    m: &CMatrix,
) -> CMatrix {
    let mut out = m.clone();
    for (k, ch) in channels.iter().enumerate() {
        if ch.kraus.len() == 1 && ch.kraus[0] == identity(ch.dim) {
            continue;
        }
        out = kraus_conjugate(shape, &out, k, &ch.kraus);
    }
    out
}

/// `(Λ_1† ⊗ … ⊗ Λ_n†)(m)`.
pub(crate) fn product_adjoint_matrix(
    shape: &SystemShape,
    channels: &[LocalChannel],
    m: &CMatrix,
) -> CMatrix {
    let mut out = m.clone();
    for (k, ch) in channels.iter().enumerate() {
        out = kraus_conjugate(shape, &out, k, &ch.adjoint().conjugating_operators());
    }
    out
}

/// Applies one channel per party.
pub fn apply_product_channel(channels: &[LocalChannel], rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_party_dims(channels, rho.shape())?;
    let out = product_channel_matrix(rho.shape(), channels, rho.matrix());
    Ok(DensityMatrix::from_parts_unchecked(rho.shape().clone(), out))
}

/// Applies the adjoint of the product channel to an arbitrary operator.
pub fn apply_product_adjoint(
    channels: &[LocalChannel],
    shape: &SystemShape,
    x: &CMatrix,
) -> Result<CMatrix> {
    check_party_dims(channels, shape)?;
    if x.nrows() != shape.total_dim() || x.ncols() != shape.total_dim() {
        return Err(Error::shape("operator size does not match the shape"));
    }
    Ok(product_adjoint_matrix(shape, channels, x))
}

/// Kraus operators are the `d × d` blocks of a Haar-random `(d·e) × d`
/// isometry.
pub fn random_local_channel(d: usize, env_dim: usize, seed: u64) -> Result<LocalChannel> {
    random_local_channel_with(d, env_dim, &mut rng_from_seed(seed))
}

pub fn random_local_channel_with(
    d: usize,
    env_dim: usize,
    rng: &mut SeededRng,
) -> Result<LocalChannel> {
    if d == 0 {
        return Err(Error::validation("channel dimension must be at least 1"));
    }
    check_env_dim(d, env_dim)?;
    let v = haar_isometry(d * env_dim, d, rng);
    let kraus = (0..env_dim)
        .map(|m| v.view((m * d, 0), (d, d)).into_owned())
        .collect();
    Ok(LocalChannel { dim: d, kraus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `ρ ↦ (1−p)ρ + p·I/d`.
    Depolarizing,
    /// Off-diagonal entries scaled by `1−p`.
    Dephasing,
    /// Qubit decay `|1> → |0>` with probability `p`.
    AmplitudeDamping,
}

pub fn standard_noise(kind: NoiseKind, d: usize, p: f64) -> Result<LocalChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("noise strength {p} outside [0, 1]")));
    }
    if d == 0 {
        return Err(Error::validation("channel dimension must be at least 1"));
    }
    if d == 1 {
        return Ok(LocalChannel::identity(1));
    }
    let kraus = match kind {
        NoiseKind::Depolarizing => {
            // Weyl operators X^a Z^b average any input to Tr(ρ) I/d
            let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
            let mut kraus = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let weight = if a == 0 && b == 0 {
                        1.0 - p + p / (d * d) as f64
                    } else {
                        p / (d * d) as f64
                    };
                    let mut w = CMatrix::zeros(d, d);
                    for j in 0..d {
                        w[((j + a) % d, j)] = omega(b * j);
                    }
                    kraus.push(w * cr(weight.sqrt()));
                }
            }
            kraus
        }
        NoiseKind::Dephasing => {
            let mut kraus = vec![identity(d) * cr((1.0 - p).sqrt())];
            for i in 0..d {
                let mut k = CMatrix::zeros(d, d);
                k[(i, i)] = cr(p.sqrt());
                kraus.push(k);
            }
            kraus
        }
        NoiseKind::AmplitudeDamping => {
            if d != 2 {
                return Err(Error::validation(format!(
                    "amplitude damping is defined for qubits only, got d = {d}"
                )));
            }
            let mut k0 = CMatrix::zeros(2, 2);
            k0[(0, 0)] = cr(1.0);
            k0[(1, 1)] = cr((1.0 - p).sqrt());
            let mut k1 = CMatrix::zeros(2, 2);
            k1[(0, 1)] = cr(p.sqrt());
            vec![k0, k1]
        }
    };
    // drop operators that vanish identically at the endpoints
    let kraus: Vec<CMatrix> = kraus.into_iter().filter(|k| k.norm() > 0.0).collect();
    LocalChannel::new(kraus)
}

/// Gram matrix `G[(i,j),(i',j')] = <e_{i'j'}|e_{ij}>` of the environment
/// vectors, indexed `(i, j) ↦ i·d + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentGram {
    dim: usize,
    gram: CMatrix,
}

impl EnvironmentGram {
    pub fn new(dim: usize, gram: CMatrix) -> Result<Self> {
        if dim == 0 || gram.nrows() != dim * dim || gram.ncols() != dim * dim {
            return Err(Error::shape(format!(
                "Gram matrix of size {}x{} for d = {dim}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        Ok(Self { dim, gram })
    }

    /// Gram matrix of explicit environment vectors, `vectors[i·d + j] = |e_ij>`.
    pub fn from_environment_vectors(dim: usize, vectors: &[crate::qcore::CVector]) -> Result<Self> {
        if vectors.len() != dim * dim {
            return Err(Error::shape(format!(
                "{} environment vectors for d = {dim}, expected {}",
                vectors.len(),
                dim * dim
            )));
        }
        let n = dim * dim;
        let gram = CMatrix::from_fn(n, n, |x, y| vectors[y].dotc(&vectors[x]));
        Self::new(dim, gram)
    }

    /// Gram matrix of an existing channel, `Σ_m K_m[j,i] conj(K_m[j',i'])`.
    pub fn from_channel(ch: &LocalChannel) -> Self {
        let d = ch.dim;
        let n = d * d;
        let mut gram = CMatrix::zeros(n, n);
        for k in &ch.kraus {
            for i in 0..d {
                for j in 0..d {
                    for ip in 0..d {
                        for jp in 0..d {
                            gram[(i * d + j, ip * d + jp)] += k[(j, i)] * k[(jp, ip)].conj();
                        }
                    }
                }
            }
        }
        Self { dim: d, gram }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.gram
    }

    /// Largest deviation of `Σ_j G[(i,j),(i',j)]` from `δ_{ii'}`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for ip in 0..d {
                let s: C64 = (0..d).map(|j| self.gram[(i * d + j, ip * d + j)]).sum();
                let target = if i == ip { 1.0 } else { 0.0 };
                worst = worst.max((s - cr(target)).norm());
            }
        }
        worst
    }
}

/// Factors `G = V†V` by eigendecomposition and reads Kraus operators from the
/// rows of `V`: `K_m[j,i] = √μ_m · u_m[(i,j)]`. `env_dim` is the numerical
/// rank of `G`.
pub fn channel_from_environment_gram(g: &EnvironmentGram) -> Result<LocalChannel> {
    let d = g.dim;
    let herm = max_abs_diff(&g.gram, &g.gram.adjoint());
    if herm > LOAD_TOL {
        return Err(Error::validation(format!(
            "environment Gram matrix is not Hermitian (residual {herm:e})"
        )));
    }
    let tp = g.trace_preservation_residual();
    if tp > LOAD_TOL {
        return Err(Error::validation(format!(
            "trace preservation violated: Σ_j G[(i,j),(i',j)] differs from δ_ii' by {tp:e}"
        )));
    }
    let sym = (&g.gram + g.gram.adjoint()) * cr(0.5);
    let (vals, vecs) = hermitian_eigen(&sym);
    if let Some(min) = vals.last() {
        if *min < -LOAD_TOL {
            return Err(Error::validation(format!(
                "environment Gram matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
    }
    let mut kraus = Vec::new();
    for (mu, u) in vals.iter().zip(&vecs) {
        if *mu <= GRAM_CLIP {
            continue;
        }
        let s = mu.sqrt();
        let k = CMatrix::from_fn(d, d, |j, i| u[i * d + j] * s);
        kraus.push(k);
    }
    LocalChannel::with_tolerance(kraus, LOAD_TOL)
}

/// Real-parameter counts for `n` parties of dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCounts {
    #[serde(skip)]
    pub n: u32,
    #[serde(skip)]
    pub d: u32,
    /// `2dⁿ − 2`
    pub pure_dim: u128,
    /// `2dⁿ − 2 + n(d⁴ − d²)`
    pub lc_bound: u128,
    /// `d²ⁿ − 1`
    pub mixed_dim: u128,
    pub lc_strictly_smaller: bool,
}

pub fn parameter_counts(n: u32, d: u32) -> Result<ParameterCounts> {
    if n < 1 || d < 2 {
        return Err(Error::validation(format!(
            "parameter counts need n >= 1 and d >= 2, got n = {n}, d = {d}"
        )));
    }
    let overflow = || Error::unsupported(format!("parameter counts overflow for n = {n}, d = {d}"));
    let big_d = d as u128;
    let dn = big_d.checked_pow(n).ok_or_else(overflow)?;
    let pure_dim = dn.checked_mul(2).ok_or_else(overflow)? - 2;
    let local = big_d.pow(4) - big_d.pow(2);
    let lc_bound = (n as u128)
        .checked_mul(local)
        .and_then(|x| x.checked_add(pure_dim))
        .ok_or_else(overflow)?;
    let mixed_dim = dn.checked_mul(dn).ok_or_else(overflow)? - 1;
    Ok(ParameterCounts {
        n,
        d,
        pure_dim,
        lc_bound,
        mixed_dim,
        lc_strictly_smaller: lc_bound < mixed_dim,
    })
}

/// On-disk channel document `{"dim": d, "kraus": [matrix, …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelDoc {
    dim: usize,
    kraus: Vec<MatrixJson>,
}

impl Serialize for LocalChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelDoc {
            dim: self.dim,
            kraus: self.kraus.iter().map(json::matrix_to_json).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ChannelDoc::deserialize(d)?;
        channel_from_doc(doc).map_err(D::Error::custom)
    }
}

fn channel_from_doc(doc: ChannelDoc) -> Result<LocalChannel> {
    let kraus = doc
        .kraus
        .iter()
        .map(|rows| json::matrix_from_json(rows))
        .collect::<Result<Vec<_>>>()?;
    let ch = LocalChannel::with_tolerance(kraus, LOAD_TOL)?;
    if ch.dim != doc.dim {
        return Err(Error::validation(format!(
            "channel file declares dim {} but Kraus operators are {}x{}",
            doc.dim, ch.dim, ch.dim
        )));
    }
    Ok(ch)
}

pub fn channel_from_str(s: &str) -> Result<LocalChannel> {
    let doc: ChannelDoc = serde_json::from_str(s)?;
    channel_from_doc(doc)
}

pub fn channel_to_string(ch: &LocalChannel) -> String {
    serde_json::to_string(ch).expect("channel serializes")
}
