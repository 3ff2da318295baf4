//! Three-qubit SLOCC classes.
//!
//! Marginal ranks separate product and biseparable states; among the fully
//! entangled states a nonzero three-tangle marks the GHZ class and a vanishing
//! one the W class. The two entangled classes are disjoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{partial_trace, PureState, RANK_TOL};

/// Default three-tangle threshold between W and GHZ.
pub const TANGLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SloccClass {
    Product,
    /// Party A factors off: `|a> ⊗ |ψ_BC>`.
    BiseparableA,
    BiseparableB,
    BiseparableC,
    W,
    #[serde(rename = "GHZ")]
    Ghz,
}

impl SloccClass {
    pub fn label(&self) -> &'static str {
        match self {
            SloccClass::Product => "Product",
            SloccClass::BiseparableA => "BiseparableA",
            SloccClass::BiseparableB => "BiseparableB",
            SloccClass::BiseparableC => "BiseparableC",
            SloccClass::W => "W",
            SloccClass::Ghz => "GHZ",
        }
    }

    /// True for the two genuinely tripartite classes.
    pub fn is_genuinely_entangled(&self) -> bool {
        matches!(self, SloccClass::W | SloccClass::Ghz)
    }
}

impl std::fmt::Display for SloccClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

fn require_three_qubits(psi: &PureState) -> Result<()> {
    if !psi.shape().is_qubits(3) {
        return Err(Error::unsupported(format!(
            "three-qubit classification needs shape [2, 2, 2], got {}",
            psi.shape()
        )));
    }
    Ok(())
}

/// Cayley hyperdeterminant of the 2×2×2 amplitude tensor `a[ijk]`.
fn hyperdeterminant(psi: &PureState) -> crate::qcore::C64 {
    let v = psi.amplitudes();
    let a = |i: usize, j: usize, k: usize| v[i * 4 + j * 2 + k];
    let (a000, a001, a010, a011) = (a(0, 0, 0), a(0, 0, 1), a(0, 1, 0), a(0, 1, 1));
    let (a100, a101, a110, a111) = (a(1, 0, 0), a(1, 0, 1), a(1, 1, 0), a(1, 1, 1));

    let squares = a000 * a000 * a111 * a111
        + a001 * a001 * a110 * a110
        + a010 * a010 * a101 * a101
        + a100 * a100 * a011 * a011;
    let pairs = a000 * a111 * a011 * a100
        + a000 * a111 * a101 * a010
        + a000 * a111 * a110 * a001
        + a011 * a100 * a101 * a010
        + a011 * a100 * a110 * a001
        + a101 * a010 * a110 * a001;
    let quads = a000 * a110 * a101 * a011 + a111 * a001 * a010 * a100;
    squares - pairs * 2.0 + quads * 4.0
}

/// `τ = 4 |Hdet(a)|`.
pub fn three_tangle(psi: &PureState) -> Result<f64> {
    require_three_qubits(psi)?;
    Ok(4.0 * hyperdeterminant(psi).norm())
}

/// Ranks of the three single-party marginals.
pub fn marginal_ranks(psi: &PureState) -> Result<(usize, usize, usize)> {
    require_three_qubits(psi)?;
    let rho = psi.to_density();
    let rank = |k: usize| -> Result<usize> {
        let m = partial_trace(&rho, &[k])?;
        Ok(m.eigenvalues().iter().filter(|&&l| l > RANK_TOL).count())
    };
    Ok((rank(0)?, rank(1)?, rank(2)?))
}

pub fn classify_three_qubit(psi: &PureState) -> Result<SloccClass> {
    classify_with_tolerance(psi, TANGLE_TOL)
}

/// Classification with a caller-chosen three-tangle threshold.
pub fn classify_with_tolerance(psi: &PureState, tangle_tol: f64) -> Result<SloccClass> {
    let ranks = marginal_ranks(psi)?;
    let ones = [ranks.0, ranks.1, ranks.2].iter().filter(|&&r| r == 1).count();
    match (ones, ranks) {
        (3, _) => Ok(SloccClass::Product),
        (1, (1, _, _)) => Ok(SloccClass::BiseparableA),
        (1, (_, 1, _)) => Ok(SloccClass::BiseparableB),
        (1, _) => Ok(SloccClass::BiseparableC),
        (0, _) => {
            if three_tangle(psi)? > tangle_tol {
                Ok(SloccClass::Ghz)
            } else {
                Ok(SloccClass::W)
            }
        }
        _ => Err(Error::validation(format!(
            "marginal ranks {ranks:?} are impossible for a normalized pure state"
        ))),
    }
}
