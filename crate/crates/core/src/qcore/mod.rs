//! Dense tensor algebra over multipartite systems.

pub mod linalg;
pub mod ops;
pub mod random;
pub mod shape;
pub mod state;

pub use linalg::{CMatrix, CVector, C64};
pub use ops::{
    canonical_state, distance, ghz, max_entangled, partial_trace, purify, schmidt_decompose,
    tensor_product, w_state, z_mixture, CanonicalKind, Metric, SchmidtForm,
};
pub use shape::{Bipartition, SystemShape};
pub use state::{DensityMatrix, PureState, State, RANK_TOL, STATE_TOL};
