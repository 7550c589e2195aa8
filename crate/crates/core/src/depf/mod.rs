//! Diffusion-enhanced particle filter.
//!
//! Three mechanisms are layered on the bootstrap recursion so the particle
//! support can grow past the prior support:
//!
//! 1. exploratory injection: the `⌊ER·N⌋` lowest-weight particles are
//!    replaced by uniform draws from an extended bounding box, carrying a
//!    total weight mass `ε` before renormalisation;
//! 2. entropy regularisation: `βH` is added to every weight, `H` being the
//!    entropy of the weight vector, which mixes the weights toward uniform;
//! 3. kernel perturbation: every particle moves by `h_opt · L · z`, with `L`
//!    the Cholesky factor of the weighted covariance and `z ~ N(0, I)`, and
//!    each move is kept only if it passes a Metropolis-Hastings test.

pub mod linalg;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{
    predict, systematic_resample, update_weights, Likelihood, StepDiagnostics, TransitionSpec,
};
use crate::particles::{effective_sample_size, shannon_entropy, ParticleSet, DEFAULT_EPS_LOG};
use crate::region::Region;

pub use linalg::{cholesky_lower, weighted_covariance, Matrix};

/// Ridge increases attempted when the covariance fails to factor.
pub const CHOLESKY_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepfParams {
    /// Fraction of the population replaced by exploratory particles per step.
    pub exploration_ratio: f64,
    /// Total weight mass handed to the exploratory particles.
    pub epsilon_weight: f64,
    /// Entropy regularisation coefficient.
    pub beta: f64,
    /// Covariance ridge.
    pub lambda_reg: f64,
    /// Resample when ESS < `ess_threshold_frac · N`.
    pub ess_threshold_frac: f64,
    pub eps_log: f64,
    /// Extended box the exploratory particles are drawn from.
    pub bounding_box: Region,
    /// Run the covariance/kernel/Metropolis-Hastings block.
    pub kernel_perturbation: bool,
    /// Replaces `h_opt` when set.
    pub bandwidth_override: Option<f64>,
}

impl DepfParams {
    pub fn new(bounding_box: Region) -> Self {
        Self {
            exploration_ratio: 0.3,
            epsilon_weight: 1e-3,
            beta: 1e-3,
            lambda_reg: 1e-6,
            ess_threshold_frac: 0.5,
            eps_log: DEFAULT_EPS_LOG,
            bounding_box,
            kernel_perturbation: true,
            bandwidth_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64, lo_open: bool| {
            let ok = if lo_open {
                v > 0.0 && v <= 1.0
            } else {
                (0.0..=1.0).contains(&v)
            };
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} out of range")))
            }
        };
        unit("exploration_ratio", self.exploration_ratio, false)?;
        unit("ess_threshold_frac", self.ess_threshold_frac, true)?;
        if !(self.epsilon_weight > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be finite and non-negative"));
        }
        if !(self.lambda_reg > 0.0) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if !(self.eps_log > 0.0) {
            return Err(Error::invalid("eps_log", "must be positive"));
        }
        if let Some(h) = self.bandwidth_override {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::invalid(
                    "bandwidth",
                    "must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }

    pub fn exploratory_count(&self, n: usize) -> usize {
        ((self.exploration_ratio * n as f64 + 1e-9).floor() as usize).min(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthInfo {
    pub h_opt: f64,
    pub scale_a: f64,
    pub dim: usize,
    pub count: usize,
}

/// `h_opt = A · N^(−1/(n+4))` with `A = (4/(n+2))^(1/(n+4))`.
pub fn optimal_bandwidth(count: usize, dim: usize) -> BandwidthInfo {
    let n = dim as f64;
    let exponent = 1.0 / (n + 4.0);
    let scale_a = (4.0 / (n + 2.0)).powf(exponent);
    BandwidthInfo {
        h_opt: scale_a * (count as f64).powf(-exponent),
        scale_a,
        dim,
        count,
    }
}

/// Replaces the lowest-weight particles (ties to the lowest index) by uniform
/// draws from the bounding box. Returns the number replaced.
pub fn inject_exploratory<R: Rng + ?Sized>(
    set: &mut ParticleSet,
    params: &DepfParams,
    rng: &mut R,
) -> Result<usize> {
    let k = params.exploratory_count(set.len());
    if k == 0 {
        return Ok(0);
    }
    if params.bounding_box.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            actual: params.bounding_box.dim(),
        });
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    {
        let w = set.weights();
        order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    }
    let mut victims = order[..k].to_vec();
    victims.sort_unstable();
    let share = params.epsilon_weight / k as f64;
    for &i in &victims {
        params.bounding_box.sample_into(rng, set.position_mut(i));
        set.weights_mut()[i] = share;
    }
    set.normalize()?;
    Ok(k)
}

/// Adds `βH` to every weight and renormalises:
/// `w' = (w + βH) / (1 + NβH)`.
pub fn entropy_regularize(weights: &[f64], beta: f64, eps_log: f64) -> Vec<f64> {
    if beta == 0.0 {
        return weights.to_vec();
    }
    let bump = beta * shannon_entropy(weights, eps_log);
    let total = 1.0 + weights.len() as f64 * bump;
    weights.iter().map(|w| (w + bump) / total).collect()
}

/// Moves every particle by `h · L · z`, `z ~ N(0, I)`. Returns the moves,
/// row-major like the positions.
pub fn kernel_perturb<R: Rng + ?Sized>(
    set: &mut ParticleSet,
    h: f64,
    l: &Matrix,
    rng: &mut R,
) -> Vec<f64> {
    let n = set.dim();
    let mut deltas = vec![0.0; set.positions().len()];
    let mut z = vec![0.0; n];
    for (x, dx) in set
        .positions_mut()
        .chunks_exact_mut(n)
        .zip(deltas.chunks_exact_mut(n))
    {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        linalg::lower_mul(l, &z, dx);
        for (xi, d) in x.iter_mut().zip(dx.iter_mut()) {
            *d *= h;
            *xi += *d;
        }
    }
    deltas
}

/// Likelihood ratio `new / old`, with the conventions `x/0 = ∞` for `x > 0`
/// and `0/0 = 1`.
fn likelihood_ratio(new: f64, old: f64) -> f64 {
    if old > 0.0 {
        new / old
    } else if new > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Accepts each perturbed particle iff
/// `α = (lik(new) / lik(old)) · exp(−½ Δxᵀ Σ⁻¹ Δx) ≥ u`, `u ~ U(0, 1]`;
/// rejected particles get their original position and weight back.
/// `chol` is the Cholesky factor of `Σ`. Returns the acceptance rate.
pub fn mh_validate<R: Rng + ?Sized>(
    original: &ParticleSet,
    perturbed: &mut ParticleSet,
    deltas: &[f64],
    chol: &Matrix,
    lik: &impl Likelihood,
    rng: &mut R,
) -> f64 {
    let n = original.dim();
    let mut accepted = 0usize;
    for i in 0..original.len() {
        let dx = &deltas[i * n..(i + 1) * n];
        let ratio = likelihood_ratio(
            lik.likelihood(perturbed.position(i)),
            lik.likelihood(original.position(i)),
        );
        let alpha = ratio * (-0.5 * linalg::mahalanobis_sq(chol, dx)).exp();
        let u = 1.0 - rng.random::<f64>();
        if alpha >= u {
            accepted += 1;
        } else {
            perturbed
                .position_mut(i)
                .copy_from_slice(original.position(i));
            perturbed.weights_mut()[i] = original.weights()[i];
        }
    }
    accepted as f64 / original.len() as f64
}

/// Factors the weighted covariance, multiplying the ridge by ten on failure.
pub fn regularized_cholesky(set: &ParticleSet, lambda_reg: f64) -> Result<(Matrix, Matrix)> {
    let mut lambda = lambda_reg;
    for _ in 0..=CHOLESKY_RETRIES {
        let sigma = weighted_covariance(set, lambda);
        match cholesky_lower(&sigma) {
            Ok(l) => return Ok((sigma, l)),
            Err(Error::NotPositiveDefinite { .. }) => lambda *= 10.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::CholeskyRetriesExhausted {
        retries: CHOLESKY_RETRIES,
    })
}

/// One diffusion-enhanced recursion:
///
/// predict → inject → reweight → entropy-regularise → resample if
/// `ESS < ess_threshold_frac · N` → covariance → Cholesky → kernel move →
/// Metropolis-Hastings → reweight.
///
/// The last four stages are skipped when `kernel_perturbation` is off, which
/// together with `ER = 0` and `β = 0` reproduces [`crate::filter::tpf_step`]
/// draw for draw.
pub fn depf_step<R: Rng + ?Sized>(
    set: &mut ParticleSet,
    trans: TransitionSpec,
    lik: &impl Likelihood,
    params: &DepfParams,
    rng: &mut R,
) -> Result<StepDiagnostics> {
    predict(set, trans, rng);
    inject_exploratory(set, params, rng)?;
    let mut degenerate_update = update_weights(set, lik)?;
    if params.beta > 0.0 {
        let w = entropy_regularize(set.weights(), params.beta, params.eps_log);
        set.set_weights(w);
    }

    let ess = effective_sample_size(set.weights());
    let resampled = ess < params.ess_threshold_frac * set.len() as f64;
    if resampled {
        systematic_resample(set, rng);
    }

    let mut acceptance_rate = None;
    if params.kernel_perturbation {
        let (_sigma, chol) = regularized_cholesky(set, params.lambda_reg)?;
        let h = params
            .bandwidth_override
            .unwrap_or_else(|| optimal_bandwidth(set.len(), set.dim()).h_opt);
        let original = set.clone();
        let deltas = kernel_perturb(set, h, &chol, rng);
        acceptance_rate = Some(mh_validate(&original, set, &deltas, &chol, lik, rng));
        degenerate_update |= update_weights(set, lik)?;
    }

    Ok(StepDiagnostics {
        ess,
        entropy: shannon_entropy(set.weights(), params.eps_log),
        resampled,
        degenerate_update,
        acceptance_rate,
    })
}
