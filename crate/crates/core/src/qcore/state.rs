use crate::error::{Error, Result};

use super::linalg::{
    cr, hermitian_eigen, hermitian_eigenvalues, hermiticity_residual, kron, kron_vec, CMatrix,
    CVector, C64,
};
use super::shape::SystemShape;

/// Tolerance for the norm, Hermiticity, positivity and trace invariants.
pub const STATE_TOL: f64 = 1e-9;

/// Eigenvalues above this count towards the rank of a density matrix.
pub const RANK_TOL: f64 = 1e-10;

/// Normalized state vector over a [`SystemShape`].
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    shape: SystemShape,
    amps: CVector,
}

impl PureState {
    /// Validating constructor; the amplitudes must already have unit norm.
    pub fn new(shape: SystemShape, amps: CVector) -> Result<Self> {
        if amps.len() != shape.total_dim() {
            return Err(Error::shape(format!(
                "{} amplitudes for shape {shape} of dimension {}",
                amps.len(),
                shape.total_dim()
            )));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { shape, amps })
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(shape: SystemShape, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::validation("cannot normalize a zero or non-finite vector"));
        }
        Self::new(shape, amps.unscale(norm))
    }

    pub(crate) fn from_parts_unchecked(shape: SystemShape, amps: CVector) -> Self {
        debug_assert_eq!(amps.len(), shape.total_dim());
        Self { shape, amps }
    }

    /// Computational basis state `|index>`.
    pub fn basis(shape: SystemShape, index: usize) -> Result<Self> {
        if index >= shape.total_dim() {
            return Err(Error::validation(format!(
                "basis index {index} out of range for dimension {}",
                shape.total_dim()
            )));
        }
        let mut amps = CVector::zeros(shape.total_dim());
        amps[index] = cr(1.0);
        Ok(Self { shape, amps })
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Equality up to a global phase: the residual after aligning the phase
    /// that maximizes the overlap modulus.
    pub fn phase_aligned_distance(&self, other: &PureState) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        let ov = other.amps.dotc(&self.amps);
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { cr(1.0) };
        (&self.amps - &other.amps * phase).norm()
    }

    pub fn approx_eq_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        self.phase_aligned_distance(other) <= tol
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        Ok(Self {
            shape: self.shape.concat(&other.shape)?,
            amps: kron_vec(&self.amps, &other.amps),
        })
    }

    /// `|ψ><ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            shape: self.shape.clone(),
            mat: &self.amps * self.amps.adjoint(),
        }
    }

    /// Applies `op` to one party and renormalizes. Fails when the result
    /// vanishes.
    pub fn apply_local(&self, party: usize, op: &CMatrix) -> Result<PureState> {
        self.shape.check_parties(&[party])?;
        if op.nrows() != self.shape.dim(party) || op.ncols() != self.shape.dim(party) {
            return Err(Error::shape(format!(
                "operator of size {}x{} on party {party} of dimension {}",
                op.nrows(),
                op.ncols(),
                self.shape.dim(party)
            )));
        }
        let amps = super::ops::apply_local_vec(&self.shape, &self.amps, party, op);
        Self::normalized(self.shape.clone(), amps)
    }
}

/// Hermitian, positive semidefinite, unit-trace operator over a
/// [`SystemShape`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    shape: SystemShape,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor for matrices produced by this crate's algorithms;
    /// no symmetrization is applied.
    pub fn new(shape: SystemShape, mat: CMatrix) -> Result<Self> {
        let rho = Self::from_parts_checked_shape(shape, mat)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Constructor for matrices read from outside the crate: after checking
    /// Hermiticity to tolerance, the matrix is replaced with `(ρ + ρ†)/2`
    /// before positivity and trace are checked.
    pub fn from_external(shape: SystemShape, mat: CMatrix) -> Result<Self> {
        let mut rho = Self::from_parts_checked_shape(shape, mat)?;
        let herm = hermiticity_residual(&rho.mat);
        if herm > STATE_TOL {
            return Err(Error::validation(format!(
                "matrix is not Hermitian (residual {herm:e})"
            )));
        }
        rho.mat = (&rho.mat + rho.mat.adjoint()) * cr(0.5);
        rho.validate()?;
        Ok(rho)
    }

    fn from_parts_checked_shape(shape: SystemShape, mat: CMatrix) -> Result<Self> {
        let d = shape.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::shape(format!(
                "{}x{} matrix for shape {shape} of dimension {d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { shape, mat })
    }

    pub(crate) fn from_parts_unchecked(shape: SystemShape, mat: CMatrix) -> Self {
        debug_assert_eq!(mat.nrows(), shape.total_dim());
        Self { shape, mat }
    }

    /// Maximally mixed state `I/D`.
    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let d = shape.total_dim();
        Self {
            mat: CMatrix::identity(d, d) * cr(1.0 / d as f64),
            shape,
        }
    }

    /// Checks Hermiticity, positivity and unit trace within [`STATE_TOL`].
    pub fn validate(&self) -> Result<()> {
        if self.mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("density matrix has non-finite entries"));
        }
        let herm = hermiticity_residual(&self.mat);
        if herm > STATE_TOL {
            return Err(Error::validation(format!(
                "density matrix is not Hermitian (residual {herm:e})"
            )));
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::validation(format!("density matrix trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::validation(format!(
                "density matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// Descending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Canonical descending eigendecomposition, see [`hermitian_eigen`].
    pub fn eigen(&self) -> (Vec<f64>, Vec<CVector>) {
        hermitian_eigen(&self.mat)
    }

    /// Number of eigenvalues above [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > RANK_TOL).count()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(Self {
            shape: self.shape.concat(&other.shape)?,
            mat: kron(&self.mat, &other.mat),
        })
    }

    /// Convex combination `Σ w_i ρ_i` of states sharing one shape. Weights
    /// must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<DensityMatrix> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::validation("empty mixture"))?;
        let mut total = 0.0;
        let mut mat = CMatrix::zeros(first.shape.total_dim(), first.shape.total_dim());
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::validation(format!("negative mixture weight {w}")));
            }
            if rho.shape != first.shape {
                return Err(Error::shape("mixture components have different shapes"));
            }
            total += w;
            mat += &rho.mat * cr(*w);
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(format!("mixture weights sum to {total}")));
        }
        Ok(Self {
            shape: first.shape.clone(),
            mat,
        })
    }
}

/// A state of either kind, as stored in state files.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Density(DensityMatrix),
}

impl State {
    pub fn shape(&self) -> &SystemShape {
        match self {
            State::Pure(p) => p.shape(),
            State::Density(d) => d.shape(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.to_density(),
            State::Density(d) => d.clone(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            State::Pure(_) => "pure",
            State::Density(_) => "density",
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityMatrix> for State {
    fn from(d: DensityMatrix) -> Self {
        State::Density(d)
    }
}
