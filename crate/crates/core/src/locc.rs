//! Bipartite LOCC: majorization, deterministic conversion from a maximally
//! entangled resource, and synthesis of arbitrary two-party mixed states.
//!
//! Synthesis draws an ensemble label `μ` with probability `p_μ`, announces it,
//! and both parties run the deterministic conversion to `|ψ_μ>`. The overall
//! output is `Σ_μ p_μ |ψ_μ><ψ_μ|`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::qcore::linalg::{complete_unitary, cr, max_abs_diff, shift_unitary};
use crate::qcore::ops::{bipartite_vector, trace_distance_matrix};
use crate::qcore::random::{derive_seed, rng_from_seed};
use crate::qcore::{
    schmidt_decompose, Bipartition, CMatrix, CVector, DensityMatrix, PureState, SystemShape,
    RANK_TOL, STATE_TOL,
};

/// Slack on prefix-sum comparisons in [`majorizes`].
const MAJORIZATION_SLACK: f64 = 1e-12;

/// Samples per independently seeded simulation chunk.
const SAMPLE_CHUNK: usize = 1 << 16;

/// `true` iff `x` majorizes `y`: after sorting both descending and padding
/// with zeros, every prefix sum of `x` is at least that of `y`.
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    for v in [x, y] {
        if let Some(neg) = v.iter().find(|&&e| e < 0.0 || !e.is_finite()) {
            return Err(Error::validation(format!("probability vector has entry {neg}")));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(format!("probability vector sums to {s}")));
        }
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        s
    };
    let (xs, ys) = (sorted(x), sorted(y));
    let n = xs.len().max(ys.len());
    let (mut px, mut py) = (0.0, 0.0);
    for i in 0..n {
        px += xs.get(i).copied().unwrap_or(0.0);
        py += ys.get(i).copied().unwrap_or(0.0);
        if px < py - MAJORIZATION_SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `psi` converts to `phi` by LOCC with certainty: the Schmidt
/// spectrum of `psi` must be majorized by that of `phi`.
pub fn can_convert(psi: &PureState, phi: &PureState, cut: &Bipartition) -> Result<bool> {
    if psi.shape() != phi.shape() {
        return Err(Error::shape(format!(
            "conversion between shapes {} and {}",
            psi.shape(),
            phi.shape()
        )));
    }
    let src = schmidt_decompose(psi, cut)?.probabilities();
    let dst = schmidt_decompose(phi, cut)?.probabilities();
    majorizes(&normalize_probs(dst), &normalize_probs(src))
}

fn normalize_probs(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleElement {
    pub probability: f64,
    pub state: PureState,
}

/// Finite ensemble `{(p_μ, |ψ_μ>)}` over one shape.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct Ensemble {
    elements: Vec<EnsembleElement>,
}

impl Ensemble {
    pub fn new(elements: Vec<EnsembleElement>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::validation("ensemble is empty"))?;
        if elements.iter().any(|e| e.state.shape() != first.state.shape()) {
            return Err(Error::shape("ensemble states have different shapes"));
        }
        if let Some(e) = elements.iter().find(|e| e.probability < 0.0) {
            return Err(Error::validation(format!("negative probability {}", e.probability)));
        }
        let total: f64 = elements.iter().map(|e| e.probability).sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(format!("ensemble probabilities sum to {total}")));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[EnsembleElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn shape(&self) -> &SystemShape {
        self.elements[0].state.shape()
    }

    /// `Σ_μ p_μ |ψ_μ><ψ_μ|`.
    pub fn mixture_matrix(&self) -> CMatrix {
        let d = self.shape().total_dim();
        let mut m = CMatrix::zeros(d, d);
        for e in &self.elements {
            let v = e.state.amplitudes();
            m += v * v.adjoint() * cr(e.probability);
        }
        m
    }
}

impl<'de> Deserialize<'de> for Ensemble {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        Ensemble::new(Vec::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Eigen-ensemble of `rho`: eigenvalues above the rank threshold, descending,
/// renormalized to sum to one, with the canonical eigenbasis.
pub fn spectral_ensemble(rho: &DensityMatrix) -> Ensemble {
    let (vals, vecs) = rho.eigen();
    let kept: Vec<(f64, CVector)> = vals
        .into_iter()
        .zip(vecs)
        .filter(|(l, _)| *l > RANK_TOL)
        .collect();
    let total: f64 = kept.iter().map(|(l, _)| l).sum();
    let elements = kept
        .into_iter()
        .map(|(l, v)| EnsembleElement {
            probability: l / total,
            state: PureState::normalized(rho.shape().clone(), v).expect("eigenvector is nonzero"),
        })
        .collect();
    Ensemble { elements }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correction {
    #[serde(with = "json::matrix")]
    pub alice: CMatrix,
    #[serde(with = "json::matrix")]
    pub bob: CMatrix,
}

/// One-shot measure-and-correct protocol turning the maximally entangled
/// resource across `cut` into `target` with certainty.
///
/// Alice measures with `K_m = Σ_i √λ_{(i+m) mod d} |i><i|`; every outcome has
/// probability `1/d`. Both parties then undo the cyclic relabelling with a
/// shift and rotate into the target's Schmidt bases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConversionProtocol {
    pub cut: Bipartition,
    /// Schmidt rank of the resource, `min(d_left, d_right)`.
    pub resource_dim: usize,
    #[serde(with = "json::matrix_seq")]
    pub alice_kraus: Vec<CMatrix>,
    pub corrections: Vec<Correction>,
    pub target: PureState,
}

/// Result of running one measurement outcome.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub probability: f64,
    pub state: PureState,
}

impl ConversionProtocol {
    pub fn shape(&self) -> &SystemShape {
        self.target.shape()
    }

    pub fn outcomes(&self) -> usize {
        self.alice_kraus.len()
    }

    /// `Σ_i |ii>/√d` across the cut, in the target's party ordering.
    pub fn resource_state(&self) -> PureState {
        let shape = self.shape();
        let m = self.resource_matrix();
        PureState::normalized(shape.clone(), bipartite_vector(shape, &self.cut, &m))
            .expect("resource is nonzero")
    }

    fn resource_matrix(&self) -> CMatrix {
        let shape = self.shape();
        let (dl, dr) = (self.cut.left_dim(shape), self.cut.right_dim(shape));
        let d = self.resource_dim;
        let mut m = CMatrix::zeros(dl, dr);
        for i in 0..d {
            m[(i, i)] = cr(1.0 / (d as f64).sqrt());
        }
        m
    }

    /// Applies `K_m ⊗ I` to the resource, renormalizes and applies the
    /// correction pair for outcome `m`.
    pub fn run_outcome(&self, m: usize) -> Result<Outcome> {
        let k = self
            .alice_kraus
            .get(m)
            .ok_or_else(|| Error::validation(format!("outcome {m} out of range")))?;
        let corr = &self.corrections[m];
        // (A ⊗ B) vec(M) = vec(A M Bᵀ) for row-major left/right indexing
        let measured = k * self.resource_matrix();
        let probability = measured.norm_squared();
        let corrected = &corr.alice * measured.unscale(probability.sqrt()) * corr.bob.transpose();
        let v = bipartite_vector(self.shape(), &self.cut, &corrected);
        Ok(Outcome {
            probability,
            state: PureState::normalized(self.shape().clone(), v)?,
        })
    }

    pub fn completeness_residual(&self) -> f64 {
        let dl = self.alice_kraus[0].nrows();
        crate::qcore::linalg::completeness_residual(&self.alice_kraus, dl)
    }
}

pub fn build_conversion(target: &PureState, cut: &Bipartition) -> Result<ConversionProtocol> {
    let shape = target.shape();
    let schmidt = schmidt_decompose(target, cut)?;
    let (dl, dr) = (cut.left_dim(shape), cut.right_dim(shape));
    let d = dl.min(dr);
    if schmidt.rank() > d {
        return Err(Error::validation(format!(
            "target Schmidt rank {} exceeds resource dimension {d}",
            schmidt.rank()
        )));
    }
    let mut lambda = normalize_probs(schmidt.probabilities());
    lambda.resize(d, 0.0);

    let u_left = complete_unitary(&schmidt.left_basis, dl);
    let u_right = complete_unitary(&schmidt.right_basis, dr);

    let mut alice_kraus = Vec::with_capacity(d);
    let mut corrections = Vec::with_capacity(d);
    for m in 0..d {
        let mut k = CMatrix::zeros(dl, dl);
        for i in 0..dl {
            k[(i, i)] = if i < d {
                cr(lambda[(i + m) % d].sqrt())
            } else {
                // levels outside the resource support
                cr(1.0 / (d as f64).sqrt())
            };
        }
        alice_kraus.push(k);
        corrections.push(Correction {
            alice: &u_left * shift_unitary(dl, d, m),
            bob: &u_right * shift_unitary(dr, d, m),
        });
    }
    Ok(ConversionProtocol {
        cut: cut.clone(),
        resource_dim: d,
        alice_kraus,
        corrections,
        target: target.clone(),
    })
}

/// Ensemble plus one conversion protocol per element.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisPlan {
    pub ensemble: Ensemble,
    pub protocols: Vec<ConversionProtocol>,
    pub target: DensityMatrix,
}

impl SynthesisPlan {
    /// Reconstruction error of the ensemble before any sampling.
    pub fn reconstruction_error(&self) -> f64 {
        max_abs_diff(&self.ensemble.mixture_matrix(), self.target.matrix())
    }
}

fn require_two_parties(rho: &DensityMatrix) -> Result<()> {
    if rho.shape().parties() != 2 {
        return Err(Error::unsupported(format!(
            "bipartite synthesis needs two parties, got shape {}",
            rho.shape()
        )));
    }
    Ok(())
}

/// Spectral ensemble of a two-party state with a conversion protocol for
/// each element.
pub fn build_synthesis_plan(rho: &DensityMatrix) -> Result<SynthesisPlan> {
    require_two_parties(rho)?;
    let ensemble = spectral_ensemble(rho);
    let cut = Bipartition::two_party();
    let protocols = ensemble
        .elements()
        .iter()
        .map(|e| build_conversion(&e.state, &cut))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthesisPlan {
        ensemble,
        protocols,
        target: rho.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    #[serde(rename = "N")]
    pub samples: u64,
    pub seed: u64,
    pub trace_distance: f64,
}

#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub plan: SynthesisPlan,
    pub empirical: DensityMatrix,
    pub trace_distance: f64,
    pub summary: SimulationSummary,
}

fn sample_index(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

fn cumulative(probs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .into_iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Builds the plan and simulates `samples` rounds of the protocol.
///
/// Samples are split into fixed-size chunks seeded from `seed`, so serial
/// and parallel runs give the same counts.
pub fn lccc_synthesize_bipartite(
    rho: &DensityMatrix,
    samples: u64,
    seed: u64,
) -> Result<SynthesisReport> {
    if samples == 0 {
        return Err(Error::validation("sample count must be positive"));
    }
    let plan = build_synthesis_plan(rho)?;

    // every (μ, m) branch is deterministic; run each once
    let mut branch_states: Vec<Vec<PureState>> = Vec::with_capacity(plan.protocols.len());
    let mut outcome_cdfs: Vec<Vec<f64>> = Vec::with_capacity(plan.protocols.len());
    for proto in &plan.protocols {
        let outcomes = (0..proto.outcomes())
            .map(|m| proto.run_outcome(m))
            .collect::<Result<Vec<_>>>()?;
        outcome_cdfs.push(cumulative(outcomes.iter().map(|o| o.probability)));
        branch_states.push(outcomes.into_iter().map(|o| o.state).collect());
    }
    let label_cdf = cumulative(plan.ensemble.elements().iter().map(|e| e.probability));

    let chunks = samples.div_ceil(SAMPLE_CHUNK as u64);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = (samples - c * SAMPLE_CHUNK as u64).min(SAMPLE_CHUNK as u64);
            let mut rng = rng_from_seed(derive_seed(seed, c));
            let mut local: Vec<Vec<u64>> =
                branch_states.iter().map(|b| vec![0u64; b.len()]).collect();
            for _ in 0..n {
                let mu = sample_index(&label_cdf, rng.random::<f64>() * label_cdf.last().unwrap());
                let cdf = &outcome_cdfs[mu];
                let m = sample_index(cdf, rng.random::<f64>() * cdf.last().unwrap());
                local[mu][m] += 1;
            }
            local
        })
        .reduce(
            || branch_states.iter().map(|b| vec![0u64; b.len()]).collect(),
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );

    let d = rho.shape().total_dim();
    let mut emp = CMatrix::zeros(d, d);
    for (states, row) in branch_states.iter().zip(&counts) {
        for (s, &n) in states.iter().zip(row) {
            if n > 0 {
                let v = s.amplitudes();
                emp += v * v.adjoint() * cr(n as f64 / samples as f64);
            }
        }
    }
    let trace_distance = trace_distance_matrix(&emp, rho.matrix());
    let empirical = DensityMatrix::new(rho.shape().clone(), emp)?;
    Ok(SynthesisReport {
        plan,
        empirical,
        trace_distance,
        summary: SimulationSummary {
            samples,
            seed,
            trace_distance,
        },
    })
}
