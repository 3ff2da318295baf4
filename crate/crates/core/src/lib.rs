//! Numerical toolkit for deciding, constructing and probing which multipartite
//! mixed states arise from pure states under local noise, with or without
//! classical communication between the parties.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: dense states, metrics, canonical constructors, Schmidt
//!   decomposition and purification over a fixed big-endian party ordering.
//! - [`channels`]: local CPTP maps in Kraus form, the environment-Gram
//!   constructor, standard noise models and parameter counting.
//! - [`slocc`]: three-qubit SLOCC classification via the three-tangle.
//! - [`locc`]: majorization, deterministic conversion from a maximally
//!   entangled resource, and bipartite mixed-state synthesis.
//! - [`reach`]: variational search for local-contamination precursors and
//!   the W/GHZ obstruction certificate.

pub mod channels;
pub mod error;
pub mod json;
pub mod locc;
pub mod qcore;
pub mod reach;
pub mod slocc;

pub use error::{Error, Result};
pub use qcore::{CMatrix, CVector, DensityMatrix, PureState, SystemShape, C64};
