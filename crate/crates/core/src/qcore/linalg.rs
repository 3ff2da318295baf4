//! Dense complex linear algebra shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues closer than this are treated as one degenerate eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Components below this magnitude are skipped when fixing the phase.
const PHASE_ANCHOR_TOL: f64 = 1e-8;

/// Residual norm a projected basis vector needs to join a canonical eigenbasis.
const BASIS_PICK_TOL: f64 = 1e-6;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entry-wise modulus of `m - m†`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Frobenius norm of `K†K` summed over a Kraus set minus the identity.
pub fn completeness_residual(kraus: &[CMatrix], d: usize) -> f64 {
    let mut acc = CMatrix::zeros(d, d);
    for k in kraus {
        acc += k.adjoint() * k;
    }
    max_abs_diff(&acc, &identity(d))
}

/// Multiplies a vector by a complex phase so that its first component of
/// significant magnitude is real and positive.
pub fn fix_phase(v: &mut CVector) {
    if let Some(anchor) = v.iter().find(|z| z.norm() > PHASE_ANCHOR_TOL) {
        let phase = anchor.conj() / anchor.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Hermitian eigendecomposition with eigenvalues in descending order.
///
/// The eigenbasis is canonical: within every degenerate eigenspace the
/// vectors are obtained by Gram-Schmidt on the projections of the
/// computational basis vectors, taken in index order, and every vector has its
/// phase fixed by [`fix_phase`]. The output therefore depends only on the
/// eigenspaces, not on the arbitrary basis the underlying solver returns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen needs a square matrix");
    if n == 0 {
        return (vec![], vec![]);
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let raw: Vec<CVector> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let mut vectors = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] <= DEGENERACY_TOL {
            end += 1;
        }
        if end - start == 1 {
            let mut v = raw[start].clone();
            fix_phase(&mut v);
            vectors.push(v);
        } else {
            vectors.extend(canonical_subspace_basis(&raw[start..end]));
        }
        start = end;
    }
    (values, vectors)
}

/// Deterministic orthonormal basis of the span of `vecs` (assumed orthonormal).
fn canonical_subspace_basis(vecs: &[CVector]) -> Vec<CVector> {
    let n = vecs[0].len();
    let g = vecs.len();
    let mut basis: Vec<CVector> = Vec::with_capacity(g);
    for col in 0..n {
        if basis.len() == g {
            break;
        }
        // P e_col = sum_k v_k conj(v_k[col])
        let mut w = CVector::zeros(n);
        for v in vecs {
            w.axpy(v[col].conj(), v, C64::new(1.0, 0.0));
        }
        for b in &basis {
            let proj = b.dotc(&w);
            w.axpy(-proj, b, C64::new(1.0, 0.0));
        }
        let norm = w.norm();
        if norm > BASIS_PICK_TOL {
            w.unscale_mut(norm);
            fix_phase(&mut w);
            basis.push(w);
        }
    }
    // Projections of e_0..e_{n-1} always span the subspace; this only guards
    // against re-orthogonalization losing a vector to round-off.
    let mut fallback = vecs.iter();
    while basis.len() < g {
        let mut w = fallback.next().expect("subspace basis exhausted").clone();
        for b in &basis {
            let proj = b.dotc(&w);
            w.axpy(-proj, b, C64::new(1.0, 0.0));
        }
        let norm = w.norm();
        if norm > BASIS_PICK_TOL {
            w.unscale_mut(norm);
            fix_phase(&mut w);
            basis.push(w);
        }
    }
    basis
}

/// Hermitian eigenvalues in descending order, without vectors.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Principal square root of a Hermitian PSD matrix; negative dust is clipped.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (lam, v) in vals.iter().zip(&vecs) {
        if *lam > 0.0 {
            out += (v * v.adjoint()) * cr(lam.sqrt());
        }
    }
    out
}

/// Descending singular values.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Isometric factor `U` of the polar decomposition `A = U P` of a tall
/// matrix, computed as `W X†` from the thin SVD `A = W Σ X†`.
pub fn polar_isometry(a: &CMatrix) -> CMatrix {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd computed u");
    let v_t = svd.v_t.expect("svd computed v_t");
    u * v_t
}

/// Extends orthonormal columns to a full unitary of dimension `dim` by
/// Gram-Schmidt against the computational basis in index order.
pub fn complete_unitary(columns: &[CVector], dim: usize) -> CMatrix {
    let mut basis: Vec<CVector> = columns.to_vec();
    let mut e = 0;
    while basis.len() < dim {
        let mut w = CVector::zeros(dim);
        w[e] = cr(1.0);
        for b in &basis {
            let proj = b.dotc(&w);
            w.axpy(-proj, b, cr(1.0));
        }
        let norm = w.norm();
        if norm > BASIS_PICK_TOL {
            w.unscale_mut(norm);
            basis.push(w);
        }
        e += 1;
        assert!(e <= dim || basis.len() == dim, "basis completion failed");
    }
    CMatrix::from_columns(&basis)
}

/// Modular shift `|k> -> |(k + m) mod period>` on the first `period` levels
/// of a `dim`-level system, identity above.
pub fn shift_unitary(dim: usize, period: usize, m: usize) -> CMatrix {
    let mut s = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let to = if k < period { (k + m) % period } else { k };
        s[(to, k)] = cr(1.0);
    }
    s
}
