//! Parameter sweeps over the two scenarios.
//!
//! A sweep is the Cartesian product of its lists. Each product element is a
//! cell with a stable index; trial `t` of cell `c` always runs with
//! `derive_seed(seed, c, t)`, whichever variant is running and whichever
//! thread picks it up, so any cell can be rerun in isolation and TPF and
//! DEPF see the same targets.

pub mod config;
pub mod output;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{OutputFormat, Phase, SweepConfig, SweepOverrides};
pub use output::{to_csv, to_json, PHASE1_HEADER, PHASE2_HEADER};

use crate::error::{Error, Result};
use crate::metrics::{aggregate_trials, SummaryStats, TrialTrace};
use crate::priors::PriorKind;
use crate::rng::derive_seed;
use crate::scenarios::{
    run_localization_trial, run_ste_trial, FilterSettings, LocalizationConfig, SteConfig, Variant,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CellKey {
    Localization {
        dim: usize,
        num_particles: usize,
        exploration_ratio: f64,
    },
    SourceSearch {
        prior: PriorKind,
        priori_scope: f64,
        ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cell_index: usize,
    pub key: CellKey,
    pub variant: Variant,
    /// The error message of the first failing trial, if any.
    pub stats: std::result::Result<SummaryStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config: SweepConfig,
    pub rows: Vec<Row>,
}

/// Cells in output order.
pub fn cells(cfg: &SweepConfig) -> Vec<CellKey> {
    let mut out = Vec::new();
    match cfg.phase {
        Phase::Localization => {
            for &dim in &cfg.dims {
                for &num_particles in &cfg.particles {
                    for &exploration_ratio in &cfg.exploration_ratios {
                        out.push(CellKey::Localization {
                            dim,
                            num_particles,
                            exploration_ratio,
                        });
                    }
                }
            }
        }
        Phase::SourceSearch => {
            for &prior in &cfg.priors {
                for &priori_scope in &cfg.scopes {
                    for &ratio in &cfg.exploration_ratios {
                        out.push(CellKey::SourceSearch {
                            prior,
                            priori_scope,
                            ratio,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn filter_settings(
    cfg: &SweepConfig,
    num_particles: usize,
    exploration_ratio: f64,
) -> FilterSettings {
    FilterSettings {
        num_particles,
        exploration_ratio,
        epsilon_weight: cfg.epsilon,
        beta: cfg.beta,
        lambda_reg: cfg.lambda,
        ess_threshold_frac: cfg.ess_threshold,
        ..FilterSettings::default()
    }
}

pub fn localization_config(cfg: &SweepConfig, dim: usize) -> Result<LocalizationConfig> {
    Ok(LocalizationConfig {
        p_norm: cfg.p_norm,
        lik_scale: cfg.lik_scale,
        iterations: cfg.iterations,
        ..LocalizationConfig::new(dim)?
    })
}

pub fn ste_config(cfg: &SweepConfig, prior: PriorKind, priori_scope: f64) -> SteConfig {
    SteConfig {
        priori_scope,
        prior_kind: prior,
        max_steps: cfg.max_steps,
        success_radius: cfg.success_radius,
        sensor_noise_std: cfg.sensor_noise_std,
        kl_mc_samples: cfg.kl_mc_samples,
        ..SteConfig::default()
    }
}

/// Runs one trial of one cell.
pub fn run_cell_trial(
    cfg: &SweepConfig,
    cell_index: usize,
    key: &CellKey,
    variant: Variant,
    trial: usize,
) -> Result<TrialTrace> {
    let seed = derive_seed(cfg.seed, cell_index as u64, trial as u64);
    match *key {
        CellKey::Localization {
            dim,
            num_particles,
            exploration_ratio,
        } => run_localization_trial(
            &localization_config(cfg, dim)?,
            variant,
            &filter_settings(cfg, num_particles, exploration_ratio),
            seed,
        ),
        CellKey::SourceSearch {
            prior,
            priori_scope,
            ratio,
        } => run_ste_trial(
            &ste_config(cfg, prior, priori_scope),
            variant,
            &filter_settings(cfg, cfg.particles[0], ratio),
            seed,
        ),
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let cells = cells(cfg);
    let tasks: Vec<(usize, Variant, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, _)| {
            cfg.variants
                .iter()
                .flat_map(move |&v| (0..cfg.trials).map(move |t| (c, v, t)))
        })
        .collect();

    let run = || -> Vec<Result<TrialTrace>> {
        tasks
            .par_iter()
            .map(|&(c, v, t)| run_cell_trial(cfg, c, &cells[c], v, t))
            .collect()
    };
    let results = if cfg.jobs == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::invalid("jobs", e.to_string()))?
            .install(run)
    };

    let mut rows = Vec::with_capacity(cells.len() * cfg.variants.len());
    let mut results = results.into_iter();
    for (cell_index, key) in cells.iter().enumerate() {
        for &variant in &cfg.variants {
            let trials: Result<Vec<TrialTrace>> = results.by_ref().take(cfg.trials).collect();
            let stats = trials
                .and_then(|t| aggregate_trials(&t, cfg.avg_step_mode))
                .map_err(|e| e.to_string());
            rows.push(Row {
                cell_index,
                key: *key,
                variant,
                stats,
            });
        }
    }
    Ok(SweepTable {
        config: cfg.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(phase: Phase) -> SweepConfig {
        SweepConfig {
            trials: 2,
            iterations: 5,
            max_steps: 5,
            kl_mc_samples: 4,
            particles: vec![60],
            ..SweepConfig::new(phase)
        }
    }

    #[test]
    fn one_row_per_cell_and_variant() {
        let mut cfg = tiny(Phase::Localization);
        cfg.dims = vec![1, 2];
        cfg.exploration_ratios = vec![0.1, 0.3, 0.6];
        let table = run_sweep(&cfg).unwrap();
        assert_eq!(table.rows.len(), 2 * 3 * 2);
        assert!(table.rows.iter().all(|r| r.stats.is_ok()));
        assert_eq!(table.rows[0].variant, Variant::Tpf);
        assert_eq!(table.rows[1].variant, Variant::Depf);
        assert_eq!(table.rows[11].cell_index, 5);
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = tiny(Phase::Localization);
        cfg.dims = vec![1, 3];
        cfg.jobs = 1;
        let serial = run_sweep(&cfg).unwrap();
        cfg.jobs = 3;
        let parallel = run_sweep(&cfg).unwrap();
        assert_eq!(serial.rows, parallel.rows);
    }

    #[test]
    fn a_single_cell_reproduces_in_isolation() {
        let mut cfg = tiny(Phase::Localization);
        cfg.exploration_ratios = vec![0.1, 0.3];
        let full = run_sweep(&cfg).unwrap();
        let trace = run_cell_trial(&cfg, 1, &cells(&cfg)[1], Variant::Depf, 1).unwrap();
        let again = run_cell_trial(&cfg, 1, &cells(&cfg)[1], Variant::Depf, 1).unwrap();
        assert_eq!(trace, again);
        assert!(full.rows[3].stats.is_ok());
    }

    #[test]
    fn failing_cells_become_error_rows() {
        let mut cfg = tiny(Phase::SourceSearch);
        cfg.priors = vec![PriorKind::Gaussian];
        cfg.scopes = vec![1.0];
        cfg.variants = vec![Variant::Tpf];
        let ok = run_sweep(&cfg).unwrap();
        assert!(ok.rows[0].stats.is_ok());

        cfg.lambda = -1.0;
        let failed = run_sweep(&cfg).unwrap();
        assert_eq!(failed.rows.len(), 1);
        assert!(failed.rows[0]
            .stats
            .as_ref()
            .unwrap_err()
            .contains("lambda"));
    }
}
