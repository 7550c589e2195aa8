//! `depf`: run the localization and source-search sweeps from the shell.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use depf_core::harness::config::{OutputFormat, Phase, SweepConfig, SweepOverrides};
use depf_core::harness::{self, localization_config, SweepTable};
use depf_core::scenarios::run_localization_trial;
use depf_core::{derive_seed, TrialTrace};

#[derive(Parser)]
#[command(
    name = "depf",
    version,
    about = "Particle filter experiments: TPF vs DEPF"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Box-prior localization sweep (one row per dim, N, ratio, variant).
    Phase1(SweepArgs),
    /// Source term estimation sweep (one row per prior, scope, ratio, variant).
    Phase2(SweepArgs),
    /// Per-iteration trace of a single localization trial.
    Demo(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with default values; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    particles: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    exploration_ratios: Option<Vec<f64>>,
    /// Prior families, e.g. `gaussian,star,ring-1/2`.
    #[arg(long, value_delimiter = ',')]
    priors: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    scopes: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// tpf, depf or both.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "K")]
    jobs: Option<usize>,
    /// all or success-only.
    #[arg(long)]
    avg_step_mode: Option<String>,
}

impl SweepArgs {
    fn overrides(&self) -> SweepOverrides {
        SweepOverrides {
            dims: self.dims.clone(),
            particles: self.particles.clone(),
            exploration_ratios: self.exploration_ratios.clone(),
            priors: self.priors.clone(),
            scopes: self.scopes.clone(),
            trials: self.trials,
            iterations: self.iterations,
            max_steps: self.max_steps,
            seed: self.seed,
            variant: self.variant.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            jobs: self.jobs,
            avg_step_mode: self.avg_step_mode.clone(),
            ..Default::default()
        }
    }

    fn resolve(&self, phase: Phase) -> Result<SweepConfig, String> {
        let mut cfg = SweepConfig::new(phase);
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            SweepOverrides::from_toml_str(&text)
                .and_then(|o| o.apply(&mut cfg))
                .map_err(|e| format!("{}: {e}", path.display()))?;
        }
        self.overrides()
            .apply(&mut cfg)
            .map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn emit(cfg: &SweepConfig, text: &str) -> Result<(), String> {
    match &cfg.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

fn sweep(args: &SweepArgs, phase: Phase) -> Result<(), String> {
    let cfg = args.resolve(phase)?;
    let table: SweepTable = harness::run_sweep(&cfg).map_err(|e| e.to_string())?;
    for row in &table.rows {
        if let Err(e) = &row.stats {
            eprintln!(
                "warning: cell {} ({}) failed: {e}",
                row.cell_index, row.variant
            );
        }
    }
    let text = match cfg.format {
        OutputFormat::Csv => harness::to_csv(&table),
        OutputFormat::Json => harness::to_json(&table),
    };
    emit(&cfg, &text)
}

const DEMO_HEADER: &str = "iteration,variant,distance,entropy,ess,resampled,acceptance_rate";

fn demo(args: &SweepArgs) -> Result<(), String> {
    let cfg = args.resolve(Phase::Localization)?;
    let dim = cfg.dims[0];
    let loc = localization_config(&cfg, dim).map_err(|e| e.to_string())?;
    let settings = harness::filter_settings(&cfg, cfg.particles[0], cfg.exploration_ratios[0]);
    let seed = derive_seed(cfg.seed, 0, 0);

    let mut out = String::from(DEMO_HEADER);
    out.push('\n');
    for &variant in &cfg.variants {
        let trace: TrialTrace = run_localization_trial(&loc, variant, &settings, seed)
            .map_err(|e| format!("{variant}: {e}"))?;
        for i in 0..trace.len() {
            let acc = trace.acceptance[i].map_or(String::new(), |a| format!("{a:.6}"));
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{},{}\n",
                i + 1,
                variant,
                trace.distances[i],
                trace.entropies[i],
                trace.ess[i],
                trace.resampled[i],
                acc
            ));
        }
    }
    emit(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Phase1(a) => sweep(a, Phase::Localization),
        Command::Phase2(a) => sweep(a, Phase::SourceSearch),
        Command::Demo(a) => demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
