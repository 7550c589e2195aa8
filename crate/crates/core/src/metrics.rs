//! Per-trial traces and cross-trial aggregates.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::StepDiagnostics;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrialTrace {
    /// Euclidean distance from the weighted-mean estimate to the target.
    pub distances: Vec<f64>,
    pub entropies: Vec<f64>,
    pub ess: Vec<f64>,
    pub resampled: Vec<bool>,
    pub acceptance: Vec<Option<f64>>,
    pub degenerate_updates: usize,
    /// `None` for fixed-horizon runs that have no notion of success.
    pub success: Option<bool>,
    pub steps_used: usize,
    pub final_distance: f64,
    pub final_entropy: f64,
}

impl TrialTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            distances: Vec::with_capacity(n),
            entropies: Vec::with_capacity(n),
            ess: Vec::with_capacity(n),
            resampled: Vec::with_capacity(n),
            acceptance: Vec::with_capacity(n),
            ..Self::default()
        }
    }

    pub fn record(&mut self, distance: f64, diag: &StepDiagnostics) {
        self.distances.push(distance);
        self.entropies.push(diag.entropy);
        self.ess.push(diag.ess);
        self.resampled.push(diag.resampled);
        self.acceptance.push(diag.acceptance_rate);
        self.degenerate_updates += diag.degenerate_update as usize;
    }

    pub fn finish(&mut self, success: Option<bool>, steps_used: usize) {
        self.success = success;
        self.steps_used = steps_used;
        self.final_distance = self.distances.last().copied().unwrap_or(f64::NAN);
        self.final_entropy = self.entropies.last().copied().unwrap_or(f64::NAN);
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Which trials enter `average_step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvgStepMode {
    /// Every trial; failures count with the steps they used (the budget).
    #[default]
    All,
    SuccessOnly,
}

impl AvgStepMode {
    pub fn name(self) -> &'static str {
        match self {
            AvgStepMode::All => "all",
            AvgStepMode::SuccessOnly => "success-only",
        }
    }
}

impl FromStr for AvgStepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(AvgStepMode::All),
            "success-only" => Ok(AvgStepMode::SuccessOnly),
            other => Err(Error::invalid(
                "avg-step-mode",
                format!("unknown mode '{other}'"),
            )),
        }
    }
}

/// Arithmetic means and population standard deviations over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub trials: usize,
    pub final_distance_mean: f64,
    pub final_distance_std: f64,
    pub final_entropy_mean: f64,
    pub final_entropy_std: f64,
    pub success_rate: f64,
    /// NaN under [`AvgStepMode::SuccessOnly`] when nothing succeeded.
    pub average_step: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

pub fn aggregate_trials(traces: &[TrialTrace], mode: AvgStepMode) -> Result<SummaryStats> {
    if traces.is_empty() {
        return Err(Error::EmptyTrialSet);
    }
    let (final_distance_mean, final_distance_std) =
        mean_std(traces.iter().map(|t| t.final_distance));
    let (final_entropy_mean, final_entropy_std) = mean_std(traces.iter().map(|t| t.final_entropy));
    let successes = traces.iter().filter(|t| t.success == Some(true)).count();
    let average_step = match mode {
        AvgStepMode::All => {
            traces.iter().map(|t| t.steps_used as f64).sum::<f64>() / traces.len() as f64
        }
        AvgStepMode::SuccessOnly if successes == 0 => f64::NAN,
        AvgStepMode::SuccessOnly => {
            traces
                .iter()
                .filter(|t| t.success == Some(true))
                .map(|t| t.steps_used as f64)
                .sum::<f64>()
                / successes as f64
        }
    };
    Ok(SummaryStats {
        trials: traces.len(),
        final_distance_mean,
        final_distance_std,
        final_entropy_mean,
        final_entropy_std,
        success_rate: successes as f64 / traces.len() as f64,
        average_step,
    })
}
