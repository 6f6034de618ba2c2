//! `fptc`: run conflict-prediction scenarios, time the methods, sample
//! trajectories for plotting, and run the Monte Carlo oracle on its own.
//!
//! The `FPTC_THREADS` environment variable bounds the parallelism degree
//! (0 or unset = automatic).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fptc_core::exec;
use fptc_core::oracle::McConfig;
use fptc_core::runner;
use fptc_core::scenario::ScenarioConfig;

#[derive(Parser)]
#[command(name = "fptc", version, about = "Probabilistic conflict prediction benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario file path.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every configured method and write results.csv.
    Run {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Output directory for results.csv and diagnostics.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time each method (except the Monte Carlo oracle) over isolated runs.
    Bench {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Timed repetitions per method.
        #[arg(long, default_value_t = 100)]
        repeats: usize,
        /// Discarded warm-up runs per method.
        #[arg(long, default_value_t = 100)]
        warmup: usize,
    },
    /// Write the nominal path, boundary geometry and sampled trajectories.
    PlotData {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Number of sampled trajectories.
        #[arg(long, default_value_t = 0)]
        paths: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run only the Monte Carlo oracle.
    Mc {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Number of sample trajectories.
        #[arg(long)]
        samples: Option<u64>,
        /// Seed for the trajectory streams.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = exec::threads_from_env();
    match exec::with_parallelism(threads, || dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, String> {
    ScenarioConfig::from_path(path).map_err(|e| e.to_string())
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { scenario, out, seed } => {
            let mut config = load(&scenario.scenario)?;
            if let Some(seed) = seed {
                config.mc.seed = seed;
            }
            let output = runner::run_to_dir(&config, &out).map_err(|e| e.to_string())?;
            println!("scenario: {}", config.name);
            println!("{:<16} {:>10} {:>12} {:>16}", "method", "partition", "runtime_ms", "probability_pct");
            for r in &output.table.rows {
                println!(
                    "{:<16} {:>10} {:>12.3} {:>16.3}",
                    r.method, r.partition, r.runtime_ms, r.probability_pct
                );
            }
            println!("wrote {}", out.join("results.csv").display());
            Ok(())
        }
        Command::Bench { scenario, repeats, warmup } => {
            if repeats < 1 {
                return Err("--repeats must be at least 1".into());
            }
            let config = load(&scenario.scenario)?;
            let rows = runner::bench(&config, repeats, warmup).map_err(|e| e.to_string())?;
            println!("scenario: {} ({repeats} repeats, {warmup} warm-up)", config.name);
            println!("{:<16} {:>10} {:>12} {:>12}", "method", "partition", "mean_ms", "std_ms");
            for r in &rows {
                println!(
                    "{:<16} {:>10} {:>12.4} {:>12.4}",
                    r.method, r.partition, r.mean_ms, r.std_ms
                );
            }
            Ok(())
        }
        Command::PlotData { scenario, paths, out } => {
            let config = load(&scenario.scenario)?;
            runner::emit_plot_data(&config, paths, &out).map_err(|e| e.to_string())?;
            println!("wrote plot data for {paths} paths to {}", out.display());
            Ok(())
        }
        Command::Mc { scenario, samples, seed } => {
            let mut config = load(&scenario.scenario)?;
            if let Some(samples) = samples {
                config.mc.samples = samples;
            }
            if let Some(seed) = seed {
                config.mc.seed = seed;
            }
            let cfg = McConfig {
                n_samples: config.mc.samples,
                dt: config.mc.dt,
                seed: config.mc.seed,
                transient: config.mc.transient,
            };
            let est = fptc_core::oracle::estimate(
                &config.model,
                &config.plan,
                &config.mc_boundary,
                config.horizon,
                &cfg,
            );
            println!(
                "mc: {:.4}% +- {:.4}% ({} samples, seed {})",
                est.probability * 100.0,
                est.std_error * 100.0,
                est.n_samples,
                config.mc.seed
            );
            Ok(())
        }
    }
}
