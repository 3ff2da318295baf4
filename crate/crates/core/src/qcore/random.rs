//! Seeded random states, unitaries and isometries.
//!
//! All sampling goes through [`SeededRng`] so a seed fixes every draw
//! bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;

use super::linalg::{c, cr, CMatrix, CVector};
use super::shape::SystemShape;
use super::state::{DensityMatrix, PureState};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for task `index` of a run seeded with `master` (SplitMix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // fill row-major so the draw order does not depend on storage layout
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for col in 0..cols {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(r, col)] = c(re * scale, im * scale);
        }
    }
    m
}

/// Haar-random `rows × cols` isometry (`rows ≥ cols`) from the QR
/// factorization of a Gaussian matrix, with the phases of `R`'s diagonal
/// moved into `Q`.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

pub fn haar_unitary(d: usize, rng: &mut SeededRng) -> CMatrix {
    haar_isometry(d, d, rng)
}

pub fn haar_state(shape: &SystemShape, rng: &mut SeededRng) -> PureState {
    let g = gaussian_matrix(shape.total_dim(), 1, rng);
    let v = CVector::from_column_slice(g.as_slice());
    PureState::normalized(shape.clone(), v).expect("gaussian vector is nonzero")
}

/// Random density matrix `G G† / Tr(G G†)` with `G` Gaussian of size
/// `D × rank`.
pub fn random_density(shape: &SystemShape, rank: usize, rng: &mut SeededRng) -> Result<DensityMatrix> {
    let g = gaussian_matrix(shape.total_dim(), rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m.unscale(tr);
    let m = (&m + m.adjoint()) * cr(0.5);
    DensityMatrix::new(shape.clone(), m)
}
