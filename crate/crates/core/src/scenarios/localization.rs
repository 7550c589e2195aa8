//! Static-target localization in `[0, 5]^n` with a p-norm likelihood.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{euclidean, FilterSettings, Stepper, Variant};
use crate::error::{Error, Result};
use crate::metrics::TrialTrace;
use crate::particles::ParticleSet;
use crate::priors::{sample_prior, PriorSpec};
use crate::region::Region;
use crate::rng::TrialRng;

pub const MAX_DIM: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationConfig {
    pub dim: usize,
    /// Search region; goals are drawn uniformly from it and it doubles as
    /// the exploratory bounding box.
    pub domain: Region,
    pub prior_box: Region,
    pub p_norm: f64,
    pub lik_scale: f64,
    pub iterations: usize,
    /// Fixed goal instead of a uniform draw.
    pub goal: Option<Vec<f64>>,
}

impl LocalizationConfig {
    /// `[0,5]^n` with the prior in the upper corner: `[4.9, 5]` in 1D, the
    /// cube `[4.5, 5]^n` otherwise.
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::invalid(
                "dims",
                format!("{dim} outside 1..={MAX_DIM}"),
            ));
        }
        let prior_lo = if dim == 1 { 4.9 } else { 4.5 };
        Ok(Self {
            dim,
            domain: Region::cube(dim, 0.0, 5.0)?,
            prior_box: Region::cube(dim, prior_lo, 5.0)?,
            p_norm: 2.0,
            lik_scale: 1.0,
            iterations: 50,
            goal: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain.dim() != self.dim || self.prior_box.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: self.prior_box.dim(),
            });
        }
        if !self.domain.contains_region(&self.prior_box) {
            return Err(Error::invalid("prior_box", "must lie inside the domain"));
        }
        if !(self.p_norm >= 1.0) {
            return Err(Error::invalid("p_norm", "must be at least 1"));
        }
        if !(self.lik_scale > 0.0 && self.lik_scale.is_finite()) {
            return Err(Error::invalid("lik_scale", "must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be at least 1"));
        }
        if let Some(g) = &self.goal {
            if g.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: g.len(),
                });
            }
        }
        Ok(())
    }

    pub fn prior(&self) -> PriorSpec {
        PriorSpec::uniform(self.prior_box.clone())
    }
}

/// `exp(−‖x − goal‖_p / sigma)`; `p = ∞` gives the max-norm.
pub fn pnorm_likelihood(x: &[f64], goal: &[f64], p: f64, sigma: f64) -> f64 {
    let d = if p.is_infinite() {
        x.iter()
            .zip(goal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else if p == 2.0 {
        euclidean(x, goal)
    } else {
        x.iter()
            .zip(goal)
            .map(|(a, b)| (a - b).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    (-d / sigma).exp()
}

pub fn run_localization_trial(
    cfg: &LocalizationConfig,
    variant: Variant,
    settings: &FilterSettings,
    seed: u64,
) -> Result<TrialTrace> {
    run_localization_trial_observed(cfg, variant, settings, seed, |_, _| {})
}

/// Like [`run_localization_trial`], calling `observe(iteration, set)` after
/// initialisation (iteration 0) and after every filter step.
pub fn run_localization_trial_observed(
    cfg: &LocalizationConfig,
    variant: Variant,
    settings: &FilterSettings,
    seed: u64,
    mut observe: impl FnMut(usize, &ParticleSet),
) -> Result<TrialTrace> {
    cfg.validate()?;
    let stepper = Stepper::new(variant, settings, cfg.domain.clone())?;
    let mut rng = TrialRng::seed_from_u64(seed);

    let goal = match &cfg.goal {
        Some(g) => g.clone(),
        None => {
            let mut g = vec![0.0; cfg.dim];
            cfg.domain.sample_into(&mut rng, &mut g);
            g
        }
    };
    let positions = sample_prior(&cfg.prior(), settings.num_particles, &mut rng)?;
    let mut set = ParticleSet::uniform(positions, cfg.dim)?;
    observe(0, &set);

    let (p, sigma) = (cfg.p_norm, cfg.lik_scale);
    let lik = |x: &[f64]| pnorm_likelihood(x, &goal, p, sigma);
    let mut trace = TrialTrace::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let diag = stepper.step(&mut set, &lik, &mut rng)?;
        trace.record(euclidean(&set.mean(), &goal), &diag);
        observe(it, &set);
    }
    trace.finish(None, cfg.iterations);
    Ok(trace)
}
