//! Operations on states: products, marginals, metrics, Schmidt form,
//! canonical constructors and purification.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::linalg::{cr, singular_values, sqrt_psd, CMatrix, CVector, C64};
use super::shape::{Bipartition, SystemShape};
use super::state::{DensityMatrix, PureState, State, RANK_TOL};

/// `(I ⊗ op ⊗ I) v` with `op` acting on `party`.
pub fn apply_local_vec(shape: &SystemShape, v: &CVector, party: usize, op: &CMatrix) -> CVector {
    let d = shape.dim(party);
    let stride = shape.stride(party);
    let n = shape.total_dim();
    let mut out = CVector::zeros(n);
    for i in 0..n {
        let a = (i / stride) % d;
        let base = i - a * stride;
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..d {
            acc += op[(a, b)] * v[base + b * stride];
        }
        out[i] = acc;
    }
    out
}

/// `(I ⊗ op ⊗ I) m` for a matrix with `shape.total_dim()` rows.
pub fn apply_local_left(shape: &SystemShape, m: &CMatrix, party: usize, op: &CMatrix) -> CMatrix {
    let d = shape.dim(party);
    let stride = shape.stride(party);
    let rows = m.nrows();
    let cols = m.ncols();
    let src = m.as_slice();
    let mut out = CMatrix::zeros(rows, cols);
    let dst = out.as_mut_slice();
    for col in 0..cols {
        let off = col * rows;
        for i in 0..rows {
            let a = (i / stride) % d;
            let base = i - a * stride;
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..d {
                acc += op[(a, b)] * src[off + base + b * stride];
            }
            dst[off + i] = acc;
        }
    }
    out
}

/// `m (I ⊗ op ⊗ I)†` for a matrix with `shape.total_dim()` columns.
pub fn apply_local_right_adjoint(
    shape: &SystemShape,
    m: &CMatrix,
    party: usize,
    op: &CMatrix,
) -> CMatrix {
    let d = shape.dim(party);
    let stride = shape.stride(party);
    let rows = m.nrows();
    let cols = m.ncols();
    let src = m.as_slice();
    let mut out = CMatrix::zeros(rows, cols);
    let dst = out.as_mut_slice();
    for j in 0..cols {
        let a = (j / stride) % d;
        let base = j - a * stride;
        for b in 0..d {
            let w = op[(a, b)].conj();
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let src_off = (base + b * stride) * rows;
            let dst_off = j * rows;
            for r in 0..rows {
                dst[dst_off + r] += src[src_off + r] * w;
            }
        }
    }
    out
}

/// `Σ_m (K_m)_party · m · (K_m)_party†`.
pub fn kraus_conjugate(shape: &SystemShape, m: &CMatrix, party: usize, kraus: &[CMatrix]) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for k in kraus {
        let left = apply_local_left(shape, m, party, k);
        out += apply_local_right_adjoint(shape, &left, party, k);
    }
    out
}

fn normalized_keep(shape: &SystemShape, keep: &[usize]) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::validation("partial trace needs at least one kept party"));
    }
    shape.check_parties(keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    Ok(keep)
}

/// Partial trace of an arbitrary square operator over `shape`, keeping the
/// listed parties in ascending order.
pub fn partial_trace_matrix(shape: &SystemShape, m: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    let keep = normalized_keep(shape, keep)?;
    let traced: Vec<usize> = (0..shape.parties()).filter(|k| !keep.contains(k)).collect();
    let kept_dim: usize = keep.iter().map(|&k| shape.dim(k)).product();
    let traced_dim: usize = traced.iter().map(|&k| shape.dim(k)).product();

    // groups[t] lists (full index, kept index) for traced index t
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept_dim); traced_dim];
    for i in 0..shape.total_dim() {
        let digits = shape.multi_index(i);
        let k = keep.iter().fold(0, |acc, &p| acc * shape.dim(p) + digits[p]);
        let t = traced.iter().fold(0, |acc, &p| acc * shape.dim(p) + digits[p]);
        groups[t].push((i, k));
    }
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(i, ki) in group {
            for &(j, kj) in group {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reduced state on `keep` (sorted ascending).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let kept = normalized_keep(rho.shape(), keep)?;
    let shape = rho.shape().select(&kept)?;
    let mat = partial_trace_matrix(rho.shape(), rho.matrix(), &kept)?;
    Ok(DensityMatrix::from_parts_unchecked(shape, mat))
}

/// Tensor product of two states of the same kind.
pub fn tensor_product(a: &State, b: &State) -> Result<State> {
    match (a, b) {
        (State::Pure(x), State::Pure(y)) => Ok(State::Pure(x.tensor(y)?)),
        (State::Density(x), State::Density(y)) => Ok(State::Density(x.tensor(y)?)),
        _ => Err(Error::validation(
            "tensor product of a pure state with a density matrix; convert one side first",
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `½ Σ σ_i(a − b)`.
    Trace,
    /// Frobenius norm of `a − b`.
    HilbertSchmidt,
    /// Uhlmann fidelity `(Tr √(√a b √a))²`, in `[0, 1]`.
    Fidelity,
}

pub fn distance(metric: Metric, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "distance between shapes {} and {}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(match metric {
        Metric::Trace => trace_distance_matrix(a.matrix(), b.matrix()),
        Metric::HilbertSchmidt => (a.matrix() - b.matrix()).norm(),
        Metric::Fidelity => {
            let sa = sqrt_psd(a.matrix());
            let inner = &sa * b.matrix() * &sa;
            let inner = (&inner + inner.adjoint()) * cr(0.5);
            let root_trace: f64 = sqrt_psd(&inner).trace().re;
            (root_trace * root_trace).min(1.0)
        }
    })
}

/// Trace distance between two operators of equal size.
pub fn trace_distance_matrix(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * singular_values(&(a - b)).iter().sum::<f64>()
}

/// Schmidt normal form of a pure state across a bipartition.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    shape: SystemShape,
    cut: Bipartition,
    /// Descending, strictly positive coefficients.
    pub coefficients: Vec<f64>,
    /// Orthonormal vectors over the left group (parties in cut order).
    pub left_basis: Vec<CVector>,
    /// Orthonormal vectors over the right group (parties in cut order).
    pub right_basis: Vec<CVector>,
}

/// Coefficients at or below this are dropped from a [`SchmidtForm`].
const SCHMIDT_DROP_TOL: f64 = 1e-12;

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn cut(&self) -> &Bipartition {
        &self.cut
    }

    /// Squared coefficients, i.e. the spectrum of either reduced state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// `Σ_i λ_i |l_i>|r_i>` mapped back to the original party ordering.
    pub fn reconstruct(&self) -> CVector {
        let dr = self.cut.right_dim(&self.shape);
        let dl = self.cut.left_dim(&self.shape);
        let mut m = CMatrix::zeros(dl, dr);
        for ((c, l), r) in self.coefficients.iter().zip(&self.left_basis).zip(&self.right_basis) {
            m += l * r.transpose() * cr(*c);
        }
        bipartite_vector(&self.shape, &self.cut, &m)
    }
}

/// Amplitudes arranged as a `left_dim × right_dim` matrix.
pub fn bipartite_matrix(psi: &PureState, cut: &Bipartition) -> CMatrix {
    let shape = psi.shape();
    let mut m = CMatrix::zeros(cut.left_dim(shape), cut.right_dim(shape));
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let (l, r) = cut.split_index(shape, i);
        m[(l, r)] = *a;
    }
    m
}

/// Inverse of [`bipartite_matrix`].
pub fn bipartite_vector(shape: &SystemShape, cut: &Bipartition, m: &CMatrix) -> CVector {
    let mut v = CVector::zeros(shape.total_dim());
    for i in 0..shape.total_dim() {
        let (l, r) = cut.split_index(shape, i);
        v[i] = m[(l, r)];
    }
    v
}

pub fn schmidt_decompose(psi: &PureState, cut: &Bipartition) -> Result<SchmidtForm> {
    cut.validate_for(psi.shape())?;
    let m = bipartite_matrix(psi, cut);
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd computed u");
    let v_t = svd.v_t.expect("svd computed v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut form = SchmidtForm {
        shape: psi.shape().clone(),
        cut: cut.clone(),
        coefficients: vec![],
        left_basis: vec![],
        right_basis: vec![],
    };
    for i in order {
        let s = svd.singular_values[i];
        if s <= SCHMIDT_DROP_TOL {
            continue;
        }
        form.coefficients.push(s);
        form.left_basis.push(u.column(i).into_owned());
        form.right_basis.push(v_t.row(i).transpose());
    }
    Ok(form)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CanonicalKind {
    /// `(|0…0> + |1…1>)/√2` on `n ≥ 2` qubits.
    Ghz(usize),
    /// `(|001> + |010> + |100>)/√3`.
    W3,
    /// `Σ_i |ii>/√d` on two `d`-level systems.
    MaxEntangled(usize),
    Basis { shape: SystemShape, index: usize },
}

pub fn canonical_state(kind: &CanonicalKind) -> Result<PureState> {
    match kind {
        CanonicalKind::Ghz(n) => {
            if *n < 2 {
                return Err(Error::unsupported(format!("GHZ state needs n >= 2, got {n}")));
            }
            let shape = SystemShape::new(vec![2; *n])?;
            let mut amps = CVector::zeros(shape.total_dim());
            amps[0] = cr(FRAC_1_SQRT_2);
            amps[shape.total_dim() - 1] = cr(FRAC_1_SQRT_2);
            PureState::new(shape, amps)
        }
        CanonicalKind::W3 => {
            let shape = SystemShape::qubits(3);
            let mut amps = CVector::zeros(8);
            let a = cr(1.0 / 3f64.sqrt());
            amps[1] = a;
            amps[2] = a;
            amps[4] = a;
            PureState::new(shape, amps)
        }
        CanonicalKind::MaxEntangled(d) => {
            if *d < 1 {
                return Err(Error::validation("maximally entangled state needs d >= 1"));
            }
            let shape = SystemShape::new(vec![*d, *d])?;
            let mut amps = CVector::zeros(d * d);
            let a = cr(1.0 / (*d as f64).sqrt());
            for i in 0..*d {
                amps[i * d + i] = a;
            }
            PureState::new(shape, amps)
        }
        CanonicalKind::Basis { shape, index } => PureState::basis(shape.clone(), *index),
    }
}

pub fn ghz(n: usize) -> PureState {
    canonical_state(&CanonicalKind::Ghz(n)).expect("GHZ for n >= 2")
}

pub fn w_state() -> PureState {
    canonical_state(&CanonicalKind::W3).expect("W state")
}

pub fn max_entangled(d: usize) -> PureState {
    canonical_state(&CanonicalKind::MaxEntangled(d)).expect("maximally entangled state")
}

/// `p|W><W| + (1−p)|GHZ><GHZ|` on three qubits.
pub fn z_mixture(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("mixture weight {p} outside [0, 1]")));
    }
    let w = w_state().to_density();
    let g = ghz(3).to_density();
    let mat = w.matrix() * cr(p) + g.matrix() * cr(1.0 - p);
    Ok(DensityMatrix::from_parts_unchecked(SystemShape::qubits(3), mat))
}

/// Purification over `shape ⊗ ancilla`: `Σ_k √λ_k |v_k>|k>` with eigenvalues
/// above the rank threshold in descending order, ancilla index `k` the
/// `k`-th computational basis state.
pub fn purify(rho: &DensityMatrix, ancilla_dims: &[usize]) -> Result<PureState> {
    let ancilla = SystemShape::new(ancilla_dims.to_vec())?;
    let (vals, vecs) = rho.eigen();
    let rank = vals.iter().filter(|&&l| l > RANK_TOL).count();
    if ancilla.total_dim() < rank {
        return Err(Error::validation(format!(
            "ancilla of dimension {} cannot purify a rank-{rank} state",
            ancilla.total_dim()
        )));
    }
    let shape = rho.shape().concat(&ancilla)?;
    let da = ancilla.total_dim();
    let mut amps = CVector::zeros(shape.total_dim());
    for (k, (lam, v)) in vals.iter().zip(&vecs).take(rank).enumerate() {
        let w = cr(lam.sqrt());
        for (s, a) in v.iter().enumerate() {
            amps[s * da + k] += a * w;
        }
    }
    PureState::normalized(shape, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::max_abs_diff;

    fn ket(bits: &str) -> PureState {
        let shape = SystemShape::qubits(bits.len());
        PureState::basis(shape, usize::from_str_radix(bits, 2).unwrap()).unwrap()
    }

    #[test]
    fn basis_products() {
        let zero = ket("0");
        let p = zero.tensor(&zero).unwrap();
        assert_eq!(p.amplitudes()[0], cr(1.0));
        assert_eq!(p.shape().total_dim(), 4);
        let mixed = tensor_product(&State::Pure(zero.clone()), &State::Density(zero.to_density()));
        assert!(mixed.is_err());
    }

    #[test]
    fn ghz_from_products() {
        let z = ket("0");
        let o = ket("1");
        let a = z.tensor(&z).unwrap().tensor(&z).unwrap();
        let b = o.tensor(&o).unwrap().tensor(&o).unwrap();
        let sum = (a.amplitudes() + b.amplitudes()) * cr(FRAC_1_SQRT_2);
        let g = ghz(3);
        assert!((sum - g.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn canonical_amplitudes() {
        let w = w_state();
        for i in 0..8 {
            let expect = if [1, 2, 4].contains(&i) { 1.0 / 3f64.sqrt() } else { 0.0 };
            assert!((w.amplitudes()[i] - cr(expect)).norm() < 1e-15);
        }
        let g = ghz(3);
        for i in 0..8 {
            let expect = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((g.amplitudes()[i] - cr(expect)).norm() < 1e-15);
        }
        let b = max_entangled(2);
        assert!((b.amplitudes()[0] - cr(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((b.amplitudes()[3] - cr(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(canonical_state(&CanonicalKind::Ghz(1)).is_err());
    }

    #[test]
    fn ghz_marginal_by_index_summation() {
        // brute force: ρ_A[a,a'] = Σ_{bc} ψ[abc] conj(ψ[a'bc])
        let g = ghz(3);
        let amps = g.amplitudes();
        let mut oracle = CMatrix::zeros(2, 2);
        for a in 0..2 {
            for ap in 0..2 {
                for bc in 0..4 {
                    oracle[(a, ap)] += amps[a * 4 + bc] * amps[ap * 4 + bc].conj();
                }
            }
        }
        let rho_a = partial_trace(&g.to_density(), &[0]).unwrap();
        assert!(max_abs_diff(rho_a.matrix(), &oracle) < 1e-15);
        assert!(max_abs_diff(rho_a.matrix(), &(CMatrix::identity(2, 2) * cr(0.5))) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = ghz(3).to_density();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[3]).is_err());
        assert!(partial_trace(&rho, &[1, 1]).is_err());
    }

    #[test]
    fn trace_distances() {
        let z = ket("0").to_density();
        let o = ket("1").to_density();
        assert!(distance(Metric::Trace, &z, &z).unwrap().abs() < 1e-15);
        assert!((distance(Metric::Trace, &z, &o).unwrap() - 1.0).abs() < 1e-15);
        // <W|GHZ> = 0 by direct amplitude sum
        let ov: C64 = w_state()
            .amplitudes()
            .iter()
            .zip(ghz(3).amplitudes().iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(ov.norm() < 1e-15);
        let d = distance(Metric::Trace, &w_state().to_density(), &ghz(3).to_density()).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(distance(Metric::Trace, &z, &ghz(3).to_density()).is_err());
    }

    #[test]
    fn fidelity_pure_pair() {
        let plus = PureState::new(
            SystemShape::qubits(1),
            CVector::from_vec(vec![cr(FRAC_1_SQRT_2), cr(FRAC_1_SQRT_2)]),
        )
        .unwrap();
        let f = distance(Metric::Fidelity, &plus.to_density(), &ket("0").to_density()).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
        let hs = distance(Metric::HilbertSchmidt, &ket("1").to_density(), &ket("0").to_density()).unwrap();
        assert!((hs - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_decompose(&max_entangled(2), &Bipartition::two_party()).unwrap();
        assert_eq!(s.rank(), 2);
        assert!(s.coefficients.iter().all(|c| (c - FRAC_1_SQRT_2).abs() < 1e-12));

        let s = schmidt_decompose(&ket("01"), &Bipartition::two_party()).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);

        let g = ghz(3);
        let cut = Bipartition::new(g.shape(), vec![0], vec![1, 2]).unwrap();
        let s = schmidt_decompose(&g, &cut).unwrap();
        assert_eq!(s.rank(), 2);
        assert!(s.coefficients.iter().all(|c| (c - FRAC_1_SQRT_2).abs() < 1e-12));
        assert!((s.reconstruct() - g.amplitudes()).norm() < 1e-12);

        let bad = Bipartition::two_party();
        assert!(schmidt_decompose(&g, &bad).is_err());
    }

    #[test]
    fn z_mixture_endpoints_and_spectrum() {
        let g = ghz(3).to_density();
        let w = w_state().to_density();
        assert!(max_abs_diff(z_mixture(0.0).unwrap().matrix(), g.matrix()) < 1e-15);
        assert!(max_abs_diff(z_mixture(1.0).unwrap().matrix(), w.matrix()) < 1e-15);
        let ev = z_mixture(0.3).unwrap().eigenvalues();
        assert!((ev[0] - 0.7).abs() < 1e-12);
        assert!((ev[1] - 0.3).abs() < 1e-12);
        assert!(ev[2..].iter().all(|e| e.abs() < 1e-12));
        assert!(z_mixture(-0.1).is_err());
        assert!(z_mixture(1.5).is_err());
    }

    #[test]
    fn purify_z_mixture_matches_closed_form() {
        let p = 0.8;
        let psi = purify(&z_mixture(p).unwrap(), &[2]).unwrap();
        let w = w_state().tensor(&ket("0")).unwrap();
        let g = ghz(3).tensor(&ket("1")).unwrap();
        let expect = w.amplitudes() * cr(p.sqrt()) + g.amplitudes() * cr((1.0 - p).sqrt());
        let expect = PureState::new(psi.shape().clone(), expect).unwrap();
        assert!(psi.approx_eq_up_to_phase(&expect, 1e-10));
    }

    #[test]
    fn purify_pure_and_too_small() {
        let g = ghz(3);
        let psi = purify(&g.to_density(), &[3]).unwrap();
        let expect = g.tensor(&PureState::basis(SystemShape::new(vec![3]).unwrap(), 0).unwrap()).unwrap();
        assert!(psi.approx_eq_up_to_phase(&expect, 1e-10));
        assert!(purify(&z_mixture(0.3).unwrap(), &[1]).is_err());
    }
}
