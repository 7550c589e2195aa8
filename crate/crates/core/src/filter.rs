//! Bootstrap particle filter: predict, reweight, normalise and resample when
//! the effective sample size falls below a threshold.
//!
//! With [`TransitionSpec::Static`] the filter can only ever copy existing
//! positions, so its support never leaves the support it started with.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::particles::{effective_sample_size, shannon_entropy, ParticleSet, DEFAULT_EPS_LOG};

/// Observation likelihood `P(y_t | x)` for the current observation.
pub trait Likelihood {
    fn likelihood(&self, x: &[f64]) -> f64;
}

impl<F> Likelihood for F
where
    F: Fn(&[f64]) -> f64,
{
    fn likelihood(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// State transition used as the importance distribution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionSpec {
    /// Identity; the targets never move.
    #[default]
    Static,
    /// Adds i.i.d. `N(0, jitter_std²)` noise on every axis.
    GaussianJitter { jitter_std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepDiagnostics {
    /// ESS of the reweighted set, the statistic that decided resampling.
    pub ess: f64,
    /// Entropy of the weights leaving the step.
    pub entropy: f64,
    pub resampled: bool,
    /// Every likelihood was zero and the weights were reset to uniform.
    pub degenerate_update: bool,
    /// Fraction of kernel moves accepted; `None` for the bootstrap filter.
    pub acceptance_rate: Option<f64>,
}

pub fn predict<R: Rng + ?Sized>(set: &mut ParticleSet, trans: TransitionSpec, rng: &mut R) {
    match trans {
        TransitionSpec::Static => {}
        TransitionSpec::GaussianJitter { jitter_std } => {
            if jitter_std > 0.0 {
                for v in set.positions_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += jitter_std * z;
                }
            }
        }
    }
}

/// Multiplies each weight by the likelihood at its position and
/// renormalises.
///
/// Returns `true` when every product was zero; the weights are then reset to
/// uniform so the run can continue.
pub fn update_weights(set: &mut ParticleSet, lik: &impl Likelihood) -> Result<bool> {
    let mut raw = Vec::with_capacity(set.len());
    for (index, (x, w)) in set.rows().zip(set.weights()).enumerate() {
        let l = lik.likelihood(x);
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::NonFiniteWeight { index, value: l });
        }
        raw.push(w * l);
    }
    match crate::particles::normalize_weights(&raw) {
        Ok(w) => {
            set.set_weights(w);
            Ok(false)
        }
        Err(Error::AllZeroWeights) => {
            set.reset_uniform_weights();
            Ok(true)
        }
        Err(e) => Err(e),
    }
}

/// Parent index for each of the `N` offspring under systematic resampling.
///
/// One uniform offset `u ∈ [0, 1)` places the pointers `(u + j) / N`; the
/// offspring count of particle `i` is therefore `⌊N w_i⌋` or `⌈N w_i⌉`.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let u: f64 = rng.random();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0] * n as f64;
    let mut i = 0;
    for j in 0..n {
        let pointer = u + j as f64;
        while pointer >= cumulative && i < n - 1 {
            i += 1;
            cumulative += weights[i] * n as f64;
        }
        out.push(i);
    }
    out
}

/// Replaces the set by `N` systematic draws and resets the weights to `1/N`.
pub fn systematic_resample<R: Rng + ?Sized>(set: &mut ParticleSet, rng: &mut R) {
    let parents = systematic_indices(set.weights(), rng);
    let dim = set.dim();
    let mut positions = Vec::with_capacity(set.positions().len());
    for &p in &parents {
        positions.extend_from_slice(set.position(p));
    }
    set.positions_mut().copy_from_slice(&positions);
    debug_assert_eq!(positions.len(), parents.len() * dim);
    set.reset_uniform_weights();
}

/// One bootstrap filter recursion. `ess_threshold` is an absolute count.
pub fn tpf_step<R: Rng + ?Sized>(
    set: &mut ParticleSet,
    trans: TransitionSpec,
    lik: &impl Likelihood,
    ess_threshold: f64,
    rng: &mut R,
) -> Result<StepDiagnostics> {
    predict(set, trans, rng);
    let degenerate_update = update_weights(set, lik)?;
    let ess = effective_sample_size(set.weights());
    let resampled = ess < ess_threshold;
    if resampled {
        systematic_resample(set, rng);
    }
    Ok(StepDiagnostics {
        ess,
        entropy: shannon_entropy(set.weights(), DEFAULT_EPS_LOG),
        resampled,
        degenerate_update,
        acceptance_rate: None,
    })
}
