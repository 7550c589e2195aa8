//! CSV and JSON serialisation of sweep tables.
//!
//! Floating-point metrics are written with six decimals; sweep parameters
//! (ratios, scopes) with Rust's shortest round-trip formatting. Error rows
//! carry `NaN` metrics in CSV and an `error` field in JSON.

use serde_json::{json, Map, Value};

use super::{CellKey, Phase, Row, SweepTable};
use crate::metrics::SummaryStats;
use crate::rng::TrialRng;

pub const PHASE1_HEADER: &str = "scenario,variant,num_particles,exploration_ratio,final_distance_mean,final_distance_std,final_entropy_mean,final_entropy_std";
pub const PHASE2_HEADER: &str =
    "type_prior,priori_scope,ratio,variant,success_rate,entropy_mean,entropy_var,distance_mean,distance_var,average_step";

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn metric_fields(phase: Phase, s: Option<&SummaryStats>) -> Vec<(&'static str, f64)> {
    let s = s.copied();
    let get = |f: fn(&SummaryStats) -> f64| s.as_ref().map_or(f64::NAN, f);
    match phase {
        Phase::Localization => vec![
            ("final_distance_mean", get(|s| s.final_distance_mean)),
            ("final_distance_std", get(|s| s.final_distance_std)),
            ("final_entropy_mean", get(|s| s.final_entropy_mean)),
            ("final_entropy_std", get(|s| s.final_entropy_std)),
        ],
        // The `_var` columns carry the population standard deviation.
        Phase::SourceSearch => vec![
            ("success_rate", get(|s| s.success_rate)),
            ("entropy_mean", get(|s| s.final_entropy_mean)),
            ("entropy_var", get(|s| s.final_entropy_std)),
            ("distance_mean", get(|s| s.final_distance_mean)),
            ("distance_var", get(|s| s.final_distance_std)),
            ("average_step", get(|s| s.average_step)),
        ],
    }
}

fn key_fields(row: &Row) -> Vec<(&'static str, Value, String)> {
    match row.key {
        CellKey::Localization {
            dim,
            num_particles,
            exploration_ratio,
        } => vec![
            ("scenario", json!(format!("{dim}D")), format!("{dim}D")),
            (
                "variant",
                json!(row.variant.label()),
                row.variant.label().to_string(),
            ),
            (
                "num_particles",
                json!(num_particles),
                num_particles.to_string(),
            ),
            (
                "exploration_ratio",
                json!(exploration_ratio),
                exploration_ratio.to_string(),
            ),
        ],
        CellKey::SourceSearch {
            prior,
            priori_scope,
            ratio,
        } => vec![
            (
                "type_prior",
                json!(prior.label()),
                prior.label().to_string(),
            ),
            (
                "priori_scope",
                json!(priori_scope),
                priori_scope.to_string(),
            ),
            ("ratio", json!(ratio), ratio.to_string()),
            (
                "variant",
                json!(row.variant.label()),
                row.variant.label().to_string(),
            ),
        ],
    }
}

pub fn to_csv(table: &SweepTable) -> String {
    let phase = table.config.phase;
    let mut out = String::new();
    out.push_str(match phase {
        Phase::Localization => PHASE1_HEADER,
        Phase::SourceSearch => PHASE2_HEADER,
    });
    out.push('\n');
    for row in &table.rows {
        let mut fields: Vec<String> = key_fields(row).into_iter().map(|(_, _, s)| s).collect();
        fields.extend(
            metric_fields(phase, row.stats.as_ref().ok())
                .into_iter()
                .map(|(_, v)| fixed(v)),
        );
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn round6(v: f64) -> Value {
    if v.is_finite() {
        // Round through the same text the CSV uses.
        json!(fixed(v).parse::<f64>().unwrap_or(v))
    } else {
        Value::Null
    }
}

/// Resolved parameters and model constants echoed next to the rows.
pub fn meta(table: &SweepTable) -> Value {
    let c = &table.config;
    let mut m = json!({
        "phase": c.phase.number(),
        "seed": c.seed,
        "seed_derivation": "ChaCha8Rng::seed_from_u64(derive_seed(seed, cell_index, trial_index)); derive_seed = splitmix64-finalizer mix, see rng module",
        "rng": std::any::type_name::<TrialRng>(),
        "trials": c.trials,
        "variants": c.variants.iter().map(|v| v.label()).collect::<Vec<_>>(),
        "particles": c.particles,
        "exploration_ratios": c.exploration_ratios,
        "beta": c.beta,
        "epsilon": c.epsilon,
        "lambda": c.lambda,
        "eps_log": crate::particles::DEFAULT_EPS_LOG,
        "ess_threshold_frac": c.ess_threshold,
        "transition": "static",
        "point_estimate": "weighted_mean",
        "std_kind": "population",
        "decimals": 6,
    });
    let extra = match c.phase {
        Phase::Localization => json!({
            "dims": c.dims,
            "iterations": c.iterations,
            "domain": "[0,5]^n",
            "prior_box": "1D: [4.9,5]; nD: [4.5,5]^n",
            "likelihood": "exp(-||x - goal||_p / lik_scale)",
            "p_norm": c.p_norm,
            "lik_scale": c.lik_scale,
        }),
        Phase::SourceSearch => {
            let d = crate::scenarios::SteConfig::default();
            json!({
                "priors": c.priors.iter().map(|p| p.label()).collect::<Vec<_>>(),
                "scopes": c.scopes,
                "max_steps": c.max_steps,
                "success_radius": c.success_radius,
                "sensor_noise_std": c.sensor_noise_std,
                "kl_mc_samples": c.kl_mc_samples,
                "avg_step_mode": c.avg_step_mode.name(),
                "dispersion_model": "c = q / (d^2 + c0), reading = c * exp(N(0, sensor_noise_std^2))",
                "release_rate": d.release_rate,
                "c0": d.c0,
                "step_length": d.step_length,
                "actions": "8-neighbourhood unit moves + stay",
                "domain": "[0,20]^2",
                "source_region": "[10,15]^2",
                "agent_start_region": "[0,5]^2",
                "prior_placement": "square of area scope*400 centred on the agent start region, translated into the domain",
                "stand_in_models": ["dispersion_model", "success_radius", "max_steps", "actions", "step_length", "prior_placement", "prior_shapes"],
                "var_columns": "population standard deviation",
            })
        }
    };
    if let (Value::Object(base), Value::Object(more)) = (&mut m, extra) {
        base.extend(more);
    }
    m
}

pub fn to_json(table: &SweepTable) -> String {
    let phase = table.config.phase;
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (k, v, _) in key_fields(row) {
                obj.insert(k.into(), v);
            }
            for (k, v) in metric_fields(phase, row.stats.as_ref().ok()) {
                obj.insert(k.into(), round6(v));
            }
            if let Err(e) = &row.stats {
                obj.insert("error".into(), json!(e));
            }
            Value::Object(obj)
        })
        .collect();
    let doc = json!({ "meta": meta(table), "rows": rows });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{SweepConfig, SweepTable};
    use crate::priors::PriorKind;
    use crate::scenarios::Variant;

    fn stats() -> SummaryStats {
        SummaryStats {
            trials: 10,
            final_distance_mean: 2.72991234,
            final_distance_std: 1.0848,
            final_entropy_mean: 6.6906,
            final_entropy_std: 0.1719,
            success_rate: 0.8,
            average_step: 71.375,
        }
    }

    #[test]
    fn phase1_csv_layout() {
        let table = SweepTable {
            config: SweepConfig::new(Phase::Localization),
            rows: vec![Row {
                cell_index: 0,
                key: CellKey::Localization {
                    dim: 1,
                    num_particles: 400,
                    exploration_ratio: 0.3,
                },
                variant: Variant::Tpf,
                stats: Ok(stats()),
            }],
        };
        assert_eq!(
            to_csv(&table),
            format!("{PHASE1_HEADER}\n1D,TPF,400,0.3,2.729912,1.084800,6.690600,0.171900\n")
        );
    }

    #[test]
    fn phase2_csv_and_json() {
        let mut table = SweepTable {
            config: SweepConfig::new(Phase::SourceSearch),
            rows: vec![Row {
                cell_index: 0,
                key: CellKey::SourceSearch {
                    prior: PriorKind::HalfRing,
                    priori_scope: 0.3,
                    ratio: 0.3,
                },
                variant: Variant::Depf,
                stats: Ok(stats()),
            }],
        };
        table.rows.push(Row {
            stats: Err("boom".into()),
            ..table.rows[0].clone()
        });
        let csv = to_csv(&table);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PHASE2_HEADER);
        assert_eq!(
            lines[1],
            "1/2 Ring,0.3,0.3,DEPF,0.800000,6.690600,0.171900,2.729912,1.084800,71.375000"
        );
        assert_eq!(lines[2], "1/2 Ring,0.3,0.3,DEPF,NaN,NaN,NaN,NaN,NaN,NaN");

        let v: Value = serde_json::from_str(&to_json(&table)).unwrap();
        assert_eq!(v["rows"][0]["distance_mean"], json!(2.729912));
        assert_eq!(v["rows"][0]["type_prior"], json!("1/2 Ring"));
        assert_eq!(v["rows"][1]["error"], json!("boom"));
        assert_eq!(v["rows"][1]["success_rate"], Value::Null);
        assert_eq!(v["meta"]["beta"], json!(1e-3));
        assert_eq!(v["meta"]["success_radius"], json!(0.5));
        assert_eq!(v["meta"]["c0"], json!(0.5));
    }
}
