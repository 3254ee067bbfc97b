//! `prism` — experiment runner CLI.
//!
//! Subcommands:
//! - `run <config.toml>`: execute the configured run (expanding any grid)
//!   and write metrics/summary (plus spectral reports when probing).
//! - `sweep <config.toml>`: same, but require a grid and rank cells by
//!   final loss.
//! - `probe <config.toml>`: same as run, but require `probe_every >= 1`
//!   so per-direction spectral rows are emitted.
//!
//! Divergence of a run is a recorded result, not a process failure: the
//! exit code stays zero.

use clap::{Args, Parser, Subcommand};
use prism_harness::config::ExperimentConfig;
use prism_harness::report::{format_f64, summary_json};
use prism_harness::runner::{
    apply_overrides, execute, execute_sweep, write_outputs, Overrides,
};
use prism_harness::{HarnessError, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "prism", about = "PRISM optimizer experiment harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration file (TOML).
    config: PathBuf,
    /// Output directory (overrides run.out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Problem seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Force the exact (eigendecomposition) polar path.
    #[arg(long)]
    exact_polar: bool,
    /// Worker threads for grid cells (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment (grid cells expand to independent runs).
    Run(CommonArgs),
    /// Run a hyperparameter grid and rank cells by final loss.
    Sweep(CommonArgs),
    /// Run with spectral probing and emit per-direction reports.
    Probe(CommonArgs),
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    apply_overrides(
        &mut cfg,
        &Overrides {
            out_dir: args.out.clone(),
            seed: args.seed,
            exact_polar: args.exact_polar,
        },
    );
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let (args, mode) = match cli.command {
        Command::Run(a) => (a, "run"),
        Command::Sweep(a) => (a, "sweep"),
        Command::Probe(a) => (a, "probe"),
    };

    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }

    let cfg = load(&args)?;
    if mode == "probe" && cfg.run.probe_every == 0 {
        return Err(HarnessError::Config(
            "probe requires run.probe_every >= 1".into(),
        ));
    }

    let output = if mode == "sweep" {
        execute_sweep(&cfg)?
    } else {
        execute(&cfg)?
    };

    let out_dir = PathBuf::from(&cfg.run.out_dir);
    let written = write_outputs(&out_dir, &output)?;

    if mode == "sweep" {
        let mut ranked: Vec<_> = output.summaries.iter().collect();
        ranked.sort_by_key(|s| s.rank.unwrap_or(usize::MAX));
        println!("rank  run_id                        final_loss      gamma    lr_max");
        for s in &ranked {
            println!(
                "{:<5} {:<29} {:<15} {:<8} {}",
                s.rank.map_or_else(|| "-".into(), |r| r.to_string()),
                s.run_id,
                s.final_loss.map_or_else(|| "diverged".into(), format_f64),
                s.gamma.map_or_else(|| "-".into(), format_f64),
                format_f64(s.lr_max),
            );
        }
    } else {
        for s in &output.summaries {
            println!(
                "{}: steps={} loss={} diverged={}",
                s.run_id,
                s.steps_run,
                s.final_loss.map_or_else(|| "n/a".into(), format_f64),
                s.diverged
            );
        }
    }
    let _ = summary_json(&output.summaries); // summaries are always serializable
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
