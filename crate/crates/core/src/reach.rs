//! Local-contamination reachability.
//!
//! [`lc_distance_search`] looks for a precursor `|Φ>` of the target's own
//! shape and one channel per party minimizing `‖(⊗_k Λ_k)(ΦΦ†) − ρ‖²_F`. It
//! alternates a precursor update with per-party gradient steps on the
//! Stinespring isometries, each retracted by polar decomposition. A small
//! residual shows the target is (numerically) LC; a large one is evidence,
//! not proof, that it is not.
//!
//! [`lccc_obstruction_check`] issues structural certificates: every
//! two-party state is LCCC, and a rank-two three-qubit state whose spectral
//! decomposition pairs a W-class with a GHZ-class state is not.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    product_adjoint_matrix, product_channel_matrix, random_local_channel_with, LocalChannel,
};
use crate::error::{Error, Result};
use crate::locc::{build_synthesis_plan, SynthesisPlan};
use crate::qcore::linalg::{completeness_residual, cr, hermitian_eigen, max_abs_diff, polar_isometry};
use crate::qcore::ops::{apply_local_left, kraus_conjugate, trace_distance_matrix};
use crate::qcore::random::{derive_seed, haar_state, rng_from_seed};
use crate::qcore::{CMatrix, CVector, DensityMatrix, PureState, SystemShape, C64, RANK_TOL};
use crate::slocc::{classify_three_qubit, SloccClass};

/// First trial step for every block of variables.
pub const INITIAL_STEP: f64 = 0.1;

/// A restart ends once any step size falls below this.
pub const STEP_FLOOR: f64 = 1e-8;

/// Factor applied to a step size after an accepted step.
pub const STEP_GROWTH: f64 = 2.0;

pub const STEP_CAP: f64 = 10.0;

/// Width of the band `|p − ½|` inside which a rank-two spectrum is treated
/// as degenerate.
pub const DEGENERACY_BAND: f64 = 1e-9;

/// Tolerance for the orthogonality and reconstruction checks on NotLCCC.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Candidate precursor plus one local channel per party.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LcConfiguration {
    pub precursor: PureState,
    pub channels: Vec<LocalChannel>,
}

impl LcConfiguration {
    pub fn new(precursor: PureState, channels: Vec<LocalChannel>) -> Result<Self> {
        let shape = precursor.shape();
        if channels.len() != shape.parties() {
            return Err(Error::shape(format!(
                "{} channels for {} parties",
                channels.len(),
                shape.parties()
            )));
        }
        for (k, ch) in channels.iter().enumerate() {
            if ch.dim() != shape.dim(k) {
                return Err(Error::shape(format!(
                    "channel {k} has dimension {} but party {k} has {}",
                    ch.dim(),
                    shape.dim(k)
                )));
            }
        }
        Ok(Self { precursor, channels })
    }

    /// `(⊗_k Λ_k)(|Φ><Φ|)`.
    pub fn output(&self) -> DensityMatrix {
        let sigma = self.precursor.to_density();
        let out = product_channel_matrix(sigma.shape(), &self.channels, sigma.matrix());
        DensityMatrix::from_parts_unchecked(sigma.shape().clone(), out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Kraus count per party, `1 ≤ e_k ≤ d_k²`.
    pub env_dims: Vec<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    /// A restart stops once one full sweep improves the objective by less.
    pub tol: f64,
    pub master_seed: u64,
}

impl SearchOptions {
    /// Full environments (`e_k = d_k²`) for every party.
    pub fn full_environment(shape: &SystemShape, restarts: usize, max_iters: usize, master_seed: u64) -> Self {
        Self {
            env_dims: shape.local_dims().iter().map(|d| d * d).collect(),
            restarts,
            max_iters,
            tol: 1e-15,
            master_seed,
        }
    }

    fn validate(&self, shape: &SystemShape) -> Result<()> {
        if self.env_dims.len() != shape.parties() {
            return Err(Error::validation(format!(
                "{} environment dimensions for {} parties",
                self.env_dims.len(),
                shape.parties()
            )));
        }
        for (k, (&e, &d)) in self.env_dims.iter().zip(shape.local_dims()).enumerate() {
            if e == 0 || e > d * d {
                return Err(Error::validation(format!(
                    "environment dimension {e} for party {k} outside 1..={}",
                    d * d
                )));
            }
        }
        if self.restarts == 0 {
            return Err(Error::validation("at least one restart is required"));
        }
        if !self.tol.is_finite() || self.tol < 0.0 {
            return Err(Error::validation(format!("tolerance {} must be finite and >= 0", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartLog {
    pub seed: u64,
    pub final_objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: LcConfiguration,
    /// Frobenius distance of the best configuration's output to the target.
    pub hs_distance: f64,
    pub trace_distance: f64,
    pub restarts_run: usize,
    pub master_seed: u64,
    pub per_restart_log: Vec<RestartLog>,
}

/// Everything recorded about one restart.
#[derive(Debug, Clone)]
pub struct RestartTrace {
    pub index: usize,
    pub seed: u64,
    pub config: LcConfiguration,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted block update, starting with the
    /// initial value.
    pub history: Vec<f64>,
    /// Worst completeness residual over all iterates.
    pub max_completeness_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// Top eigenvector of `Λ†(ρ)`: the unit vector maximizing
/// `Tr(ρ Λ(|Φ><Φ|))`.
pub fn precursor_optimal_for_channels(
    channels: &[LocalChannel],
    target: &DensityMatrix,
) -> Result<PureState> {
    LcConfiguration::new(
        PureState::basis(target.shape().clone(), 0)?,
        channels.to_vec(),
    )?;
    let adj = product_adjoint_matrix(target.shape(), channels, target.matrix());
    Ok(top_eigenvector(target.shape(), &adj))
}

fn top_eigenvector(shape: &SystemShape, m: &CMatrix) -> PureState {
    let herm = (m + m.adjoint()) * cr(0.5);
    let (_, vecs) = hermitian_eigen(&herm);
    PureState::normalized(shape.clone(), vecs[0].clone()).expect("eigenvector is nonzero")
}

/// Mutable state of one restart.
struct Walker<'a> {
    shape: &'a SystemShape,
    target: &'a CMatrix,
    phi: CVector,
    kraus: Vec<Vec<CMatrix>>,
    objective: f64,
    precursor_step: f64,
    channel_steps: Vec<f64>,
    max_completeness: f64,
}

fn squared_frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr_{¬party}(m)` for an operator over `shape`.
fn partial_trace_single(shape: &SystemShape, m: &CMatrix, party: usize) -> CMatrix {
    let d = shape.dim(party);
    let stride = shape.stride(party);
    let mut out = CMatrix::zeros(d, d);
    for i in 0..shape.total_dim() {
        let a = (i / stride) % d;
        let base = i - a * stride;
        for b in 0..d {
            out[(a, b)] += m[(i, base + b * stride)];
        }
    }
    out
}

impl<'a> Walker<'a> {
    fn new(shape: &'a SystemShape, target: &'a CMatrix, config: &LcConfiguration) -> Self {
        let kraus: Vec<Vec<CMatrix>> = config.channels.iter().map(|c| c.kraus().to_vec()).collect();
        let mut w = Self {
            shape,
            target,
            phi: config.precursor.amplitudes().clone(),
            max_completeness: kraus
                .iter()
                .zip(shape.local_dims())
                .map(|(k, &d)| completeness_residual(k, d))
                .fold(0.0, f64::max),
            kraus,
            objective: 0.0,
            precursor_step: INITIAL_STEP,
            channel_steps: vec![INITIAL_STEP; shape.parties()],
        };
        w.objective = w.objective_for(&w.phi, &w.kraus);
        w
    }

    fn output_for(&self, phi: &CVector, kraus: &[Vec<CMatrix>]) -> CMatrix {
        let mut out = phi * phi.adjoint();
        for (k, ops) in kraus.iter().enumerate() {
            out = kraus_conjugate(self.shape, &out, k, ops);
        }
        out
    }

    fn objective_for(&self, phi: &CVector, kraus: &[Vec<CMatrix>]) -> f64 {
        squared_frobenius(&(self.output_for(phi, kraus) - self.target))
    }

    fn apply_all_but(&self, sigma: &CMatrix, skip: usize) -> CMatrix {
        let mut out = sigma.clone();
        for (k, ops) in self.kraus.iter().enumerate() {
            if k != skip {
                out = kraus_conjugate(self.shape, &out, k, ops);
            }
        }
        out
    }

    fn adjoint_of(&self, x: &CMatrix) -> CMatrix {
        let mut out = x.clone();
        for (k, ops) in self.kraus.iter().enumerate() {
            let adj: Vec<CMatrix> = ops.iter().map(|o| o.adjoint()).collect();
            out = kraus_conjugate(self.shape, &out, k, &adj);
        }
        out
    }

    /// Returns false when the step size fell through the floor.
    fn precursor_update(&mut self) -> bool {
        let candidate = {
            let adj = self.adjoint_of(self.target);
            top_eigenvector(self.shape, &adj).into_amplitudes()
        };
        let f = self.objective_for(&candidate, &self.kraus);
        if f <= self.objective {
            self.phi = candidate;
            self.objective = f;
            return true;
        }
        // the overlap maximizer can lose on the quadratic term; fall back to
        // a gradient step on the sphere
        let residual = self.output_for(&self.phi, &self.kraus) - self.target;
        let grad = self.adjoint_of(&residual) * &self.phi * cr(4.0);
        loop {
            let trial = &self.phi - &grad * cr(self.precursor_step);
            let norm = trial.norm();
            if norm > 0.0 {
                let trial = trial.unscale(norm);
                let f = self.objective_for(&trial, &self.kraus);
                if f <= self.objective {
                    self.phi = trial;
                    self.objective = f;
                    self.precursor_step = (self.precursor_step * STEP_GROWTH).min(STEP_CAP);
                    return true;
                }
            }
            self.precursor_step *= 0.5;
            if self.precursor_step < STEP_FLOOR {
                return false;
            }
        }
    }

    /// Gradient step on party `k`'s isometry with polar retraction.
    fn channel_update(&mut self, k: usize) -> bool {
        let d = self.shape.dim(k);
        let sigma = &self.phi * self.phi.adjoint();
        let others = self.apply_all_but(&sigma, k);
        let out = kraus_conjugate(self.shape, &others, k, &self.kraus[k]);
        let residual = out - self.target;
        let e = self.kraus[k].len();

        // ∂f/∂K̄_m = 2 Tr_{¬k}(R (K_m ⊗ I) σ'), reported as the real gradient 4·(…)
        let mut v = CMatrix::zeros(d * e, d);
        let mut g = CMatrix::zeros(d * e, d);
        for (m, op) in self.kraus[k].iter().enumerate() {
            let lifted = apply_local_left(self.shape, &others, k, op);
            let block = partial_trace_single(self.shape, &(&residual * lifted), k) * cr(4.0);
            g.view_mut((m * d, 0), (d, d)).copy_from(&block);
            v.view_mut((m * d, 0), (d, d)).copy_from(op);
        }
        loop {
            let trial = polar_isometry(&(&v - &g * cr(self.channel_steps[k])));
            let ops: Vec<CMatrix> = (0..e).map(|m| trial.view((m * d, 0), (d, d)).into_owned()).collect();
            let out = kraus_conjugate(self.shape, &others, k, &ops);
            let f = squared_frobenius(&(out - self.target));
            if f <= self.objective {
                self.max_completeness = self.max_completeness.max(completeness_residual(&ops, d));
                self.kraus[k] = ops;
                self.objective = f;
                self.channel_steps[k] = (self.channel_steps[k] * STEP_GROWTH).min(STEP_CAP);
                return true;
            }
            self.channel_steps[k] *= 0.5;
            if self.channel_steps[k] < STEP_FLOOR {
                return false;
            }
        }
    }

    fn into_config(self) -> LcConfiguration {
        let precursor = PureState::from_parts_unchecked(self.shape.clone(), self.phi);
        let channels = self
            .kraus
            .into_iter()
            .zip(self.shape.local_dims())
            .map(|(k, &d)| LocalChannel::from_kraus_unchecked(d, k))
            .collect();
        LcConfiguration { precursor, channels }
    }
}

fn initial_configuration(
    target: &DensityMatrix,
    opts: &SearchOptions,
    index: usize,
    seed: u64,
) -> Result<LcConfiguration> {
    let shape = target.shape();
    if index == 0 {
        let (_, vecs) = target.eigen();
        let precursor = PureState::normalized(shape.clone(), vecs[0].clone())?;
        let channels = shape
            .local_dims()
            .iter()
            .zip(&opts.env_dims)
            .map(|(&d, &e)| LocalChannel::identity_padded(d, e))
            .collect::<Result<Vec<_>>>()?;
        return LcConfiguration::new(precursor, channels);
    }
    let mut rng = rng_from_seed(seed);
    let precursor = haar_state(shape, &mut rng);
    let channels = shape
        .local_dims()
        .iter()
        .zip(&opts.env_dims)
        .map(|(&d, &e)| random_local_channel_with(d, e, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    LcConfiguration::new(precursor, channels)
}

/// Runs restart `index` of a search. Restart 0 starts from the target's top
/// eigenvector and identity channels; the others from seeded random
/// configurations.
pub fn run_restart(target: &DensityMatrix, opts: &SearchOptions, index: usize) -> Result<RestartTrace> {
    opts.validate(target.shape())?;
    let seed = derive_seed(opts.master_seed, index as u64);
    let init = initial_configuration(target, opts, index, seed)?;
    let shape = target.shape();
    let mut walker = Walker::new(shape, target.matrix(), &init);
    let mut history = vec![walker.objective];
    let mut iterations = 0;
    'outer: while iterations < opts.max_iters {
        iterations += 1;
        let before = walker.objective;
        let ok = walker.precursor_update();
        history.push(walker.objective);
        if !ok {
            break;
        }
        for k in 0..shape.parties() {
            let ok = walker.channel_update(k);
            history.push(walker.objective);
            if !ok {
                break 'outer;
            }
        }
        if before - walker.objective < opts.tol {
            break;
        }
    }
    let objective = walker.objective;
    let max_completeness_residual = walker.max_completeness;
    Ok(RestartTrace {
        index,
        seed,
        config: walker.into_config(),
        objective,
        iterations,
        history,
        max_completeness_residual,
    })
}

/// Runs every restart and keeps the best, breaking ties by lower index.
pub fn lc_distance_search_traced(
    target: &DensityMatrix,
    opts: &SearchOptions,
    execution: Execution,
) -> Result<(SearchResult, Vec<RestartTrace>)> {
    opts.validate(target.shape())?;
    let traces: Vec<RestartTrace> = match execution {
        Execution::Serial => (0..opts.restarts)
            .map(|i| run_restart(target, opts, i))
            .collect::<Result<_>>()?,
        Execution::Parallel => (0..opts.restarts)
            .into_par_iter()
            .map(|i| run_restart(target, opts, i))
            .collect::<Result<_>>()?,
    };
    let best = traces
        .iter()
        .fold(&traces[0], |acc, t| if t.objective < acc.objective { t } else { acc });
    let out = best.config.output();
    let result = SearchResult {
        best: best.config.clone(),
        hs_distance: (out.matrix() - target.matrix()).norm(),
        trace_distance: trace_distance_matrix(out.matrix(), target.matrix()),
        restarts_run: traces.len(),
        master_seed: opts.master_seed,
        per_restart_log: traces
            .iter()
            .map(|t| RestartLog {
                seed: t.seed,
                final_objective: t.objective,
                iterations: t.iterations,
            })
            .collect(),
    };
    Ok((result, traces))
}

pub fn lc_distance_search(target: &DensityMatrix, opts: &SearchOptions) -> Result<SearchResult> {
    lc_distance_search_traced(target, opts, Execution::Parallel).map(|(r, _)| r)
}

/// Outcome of the structural LCCC analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Certificate {
    /// `ρ = p|a><a| + (1−p)|b><b|` with `a ⊥ b` in the two disjoint
    /// genuinely tripartite classes.
    #[serde(rename = "NotLCCC")]
    NotLccc {
        probability: f64,
        first: PureState,
        second: PureState,
        classes: (SloccClass, SloccClass),
    },
    #[serde(rename = "LCCCBipartite")]
    LcccBipartite { plan: SynthesisPlan },
    Unknown { reason: String },
}

impl Certificate {
    pub fn verdict(&self) -> &'static str {
        match self {
            Certificate::NotLccc { .. } => "NotLCCC",
            Certificate::LcccBipartite { .. } => "LCCCBipartite",
            Certificate::Unknown { .. } => "Unknown",
        }
    }

    pub fn is_not_lccc(&self) -> bool {
        matches!(self, Certificate::NotLccc { .. })
    }
}

fn is_w_ghz_pair(a: SloccClass, b: SloccClass) -> bool {
    matches!(
        (a, b),
        (SloccClass::W, SloccClass::Ghz) | (SloccClass::Ghz, SloccClass::W)
    )
}

/// Builds a NotLCCC certificate after re-checking every soundness condition.
fn checked_obstruction(
    rho: &DensityMatrix,
    p: f64,
    a: CVector,
    b: CVector,
) -> Option<Certificate> {
    let shape = rho.shape();
    let first = PureState::normalized(shape.clone(), a).ok()?;
    let second = PureState::normalized(shape.clone(), b).ok()?;
    if first.inner(&second).norm() > CERTIFICATE_TOL {
        return None;
    }
    let rebuilt = first.to_density().matrix() * cr(p) + second.to_density().matrix() * cr(1.0 - p);
    if max_abs_diff(&rebuilt, rho.matrix()) > CERTIFICATE_TOL {
        return None;
    }
    let ca = classify_three_qubit(&first).ok()?;
    let cb = classify_three_qubit(&second).ok()?;
    is_w_ghz_pair(ca, cb).then_some(Certificate::NotLccc {
        probability: p,
        first,
        second,
        classes: (ca, cb),
    })
}

/// Angles of the fixed 8 × 8 grid of rotations scanned in a degenerate
/// eigenspace: `θ_j = jπ/16`, `φ_k = kπ/4`.
fn rotation_grid() -> impl Iterator<Item = (f64, f64)> {
    (0..8).flat_map(|j| (0..8).map(move |k| (j as f64 * PI / 16.0, k as f64 * PI / 4.0)))
}

pub fn lccc_obstruction_check(rho: &DensityMatrix) -> Certificate {
    let shape = rho.shape();
    if shape.parties() == 2 {
        return match build_synthesis_plan(rho) {
            Ok(plan) => Certificate::LcccBipartite { plan },
            Err(e) => Certificate::Unknown {
                reason: format!("bipartite synthesis failed: {e}"),
            },
        };
    }
    if !shape.is_qubits(3) {
        return Certificate::Unknown {
            reason: "no implemented criterion".into(),
        };
    }
    let (vals, vecs) = rho.eigen();
    let rank = vals.iter().filter(|&&l| l > RANK_TOL).count();
    if rank != 2 {
        return Certificate::Unknown {
            reason: "no implemented criterion".into(),
        };
    }
    let p = vals[0] / (vals[0] + vals[1]);
    let (v1, v2) = (vecs[0].clone(), vecs[1].clone());

    if (p - 0.5).abs() > DEGENERACY_BAND {
        return checked_obstruction(rho, p, v1, v2).unwrap_or_else(|| Certificate::Unknown {
            reason: "argument inapplicable: spectral states are not one W-class and one GHZ-class state"
                .into(),
        });
    }
    for (theta, phase) in rotation_grid() {
        let (c, s) = (theta.cos(), theta.sin());
        let e = C64::from_polar(1.0, phase);
        let a = &v1 * cr(c) + &v2 * (e * s);
        let b = &v1 * (-e.conj() * s) + &v2 * cr(c);
        if let Some(cert) = checked_obstruction(rho, 0.5, a, b) {
            return cert;
        }
    }
    Certificate::Unknown {
        reason: "argument inapplicable: no scanned basis of the degenerate eigenspace splits into W and GHZ classes"
            .into(),
    }
}
