//! Experiment worlds: p-norm localization and mobile-sensor source term
//! estimation, plus the filter settings they share.

pub mod localization;
pub mod ste;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::depf::{depf_step, DepfParams};
use crate::error::{Error, Result};
use crate::filter::{tpf_step, Likelihood, StepDiagnostics, TransitionSpec};
use crate::particles::{ParticleSet, DEFAULT_EPS_LOG};
use crate::region::Region;

pub use localization::{pnorm_likelihood, run_localization_trial, LocalizationConfig};
pub use ste::{run_ste_trial, SteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Tpf,
    Depf,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Tpf => "TPF",
            Variant::Depf => "DEPF",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tpf" => Ok(Variant::Tpf),
            "depf" => Ok(Variant::Depf),
            other => Err(Error::invalid(
                "variant",
                format!("unknown variant '{other}'"),
            )),
        }
    }
}

/// Filter tuning shared by both scenarios. The bootstrap filter only reads
/// `num_particles`, `transition` and `ess_threshold_frac`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSettings {
    pub num_particles: usize,
    pub transition: TransitionSpec,
    pub exploration_ratio: f64,
    pub epsilon_weight: f64,
    pub beta: f64,
    pub lambda_reg: f64,
    pub ess_threshold_frac: f64,
    pub eps_log: f64,
    pub kernel_perturbation: bool,
    pub bandwidth_override: Option<f64>,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            num_particles: 400,
            transition: TransitionSpec::Static,
            exploration_ratio: 0.3,
            epsilon_weight: 1e-3,
            beta: 1e-3,
            lambda_reg: 1e-6,
            ess_threshold_frac: 0.5,
            eps_log: DEFAULT_EPS_LOG,
            kernel_perturbation: true,
            bandwidth_override: None,
        }
    }
}

impl FilterSettings {
    pub fn depf_params(&self, bounding_box: Region) -> DepfParams {
        DepfParams {
            exploration_ratio: self.exploration_ratio,
            epsilon_weight: self.epsilon_weight,
            beta: self.beta,
            lambda_reg: self.lambda_reg,
            ess_threshold_frac: self.ess_threshold_frac,
            eps_log: self.eps_log,
            bounding_box,
            kernel_perturbation: self.kernel_perturbation,
            bandwidth_override: self.bandwidth_override,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_particles == 0 {
            return Err(Error::invalid("particles", "must be at least 1"));
        }
        if let TransitionSpec::GaussianJitter { jitter_std } = self.transition {
            if !(jitter_std >= 0.0 && jitter_std.is_finite()) {
                return Err(Error::invalid(
                    "jitter_std",
                    "must be finite and non-negative",
                ));
            }
        }
        // The box is irrelevant to the scalar checks.
        self.depf_params(Region::cube(1, 0.0, 1.0)?).validate()
    }
}

/// A filter variant bound to its parameters for one trial.
pub(crate) struct Stepper {
    variant: Variant,
    transition: TransitionSpec,
    params: DepfParams,
}

impl Stepper {
    pub(crate) fn new(
        variant: Variant,
        settings: &FilterSettings,
        bounding_box: Region,
    ) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            variant,
            transition: settings.transition,
            params: settings.depf_params(bounding_box),
        })
    }

    pub(crate) fn step<R: Rng + ?Sized>(
        &self,
        set: &mut ParticleSet,
        lik: &impl Likelihood,
        rng: &mut R,
    ) -> Result<StepDiagnostics> {
        match self.variant {
            Variant::Tpf => tpf_step(
                set,
                self.transition,
                lik,
                self.params.ess_threshold_frac * set.len() as f64,
                rng,
            ),
            Variant::Depf => depf_step(set, self.transition, lik, &self.params, rng),
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
