//! `lrc`: generate benchmark data, train models, check gradients and compute
//! Lipschitz reports.

mod commands;
mod config;
mod error;
mod paths;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{compare, gen_data, grad_check, lipschitz, train};
use error::CliResult;

/// Relative output and data paths are resolved against $LRC_OUTPUT_ROOT when set.
/// Exit codes: 0 success, 1 failed check or run, 2 usage or configuration error.
#[derive(Debug, Parser)]
#[command(name = "lrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a benchmark trajectory (or the irregular classification set) and update the manifest.
    GenData {
        /// ODE system name, or `irregular`.
        system: String,
        out_dir: PathBuf,
        /// Initial state, comma separated.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Number of sequences of the classification set.
        #[arg(long, default_value_t = 500)]
        sequences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train every seed of an experiment file.
    Train {
        config: PathBuf,
        /// Replaces `output_dir` of the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare BPTT against central differences on a small random instance.
    GradCheck {
        config: PathBuf,
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
    /// Certified (and optionally measured) Lipschitz constant of a checkpoint.
    Lipschitz {
        checkpoint: PathBuf,
        /// Step size; defaults to the one recorded in the checkpoint.
        #[arg(long)]
        dt: Option<f64>,
        /// Per-neuron |h| bound, one value or comma separated; defaults to the recorded envelope.
        #[arg(long)]
        h_bound: Option<String>,
        /// Restrict the elastance preactivation to `lo,hi`.
        #[arg(long)]
        w_range: Option<String>,
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 2000)]
        probes: usize,
        #[arg(long, default_value_t = 1e-5)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train models on ODE tasks and tabulate mean and std of the test loss.
    Compare {
        /// Comma separated system names, or `all`.
        #[arg(long)]
        task: String,
        #[arg(long, default_value = "lrc,neural_ode")]
        models: String,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        /// Overrides the per-task iteration budget.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData {
            system,
            out_dir,
            x0,
            horizon,
            samples,
            sequences,
            seed,
        } => gen_data::run(&gen_data::GenDataArgs {
            system: &system,
            out_dir: &out_dir,
            x0: x0.as_deref(),
            horizon,
            samples,
            sequences,
            seed,
        }),
        Command::Train { config, output_dir } => {
            train::run(&config, output_dir.as_deref()).map(drop)
        }
        Command::GradCheck { config, corrupt } => grad_check::run(&config, corrupt.as_deref()),
        Command::Lipschitz {
            checkpoint,
            dt,
            h_bound,
            w_range,
            empirical,
            probes,
            radius,
            seed,
            out,
        } => lipschitz::run(&lipschitz::LipschitzArgs {
            checkpoint: &checkpoint,
            dt,
            h_bound: h_bound.as_deref(),
            w_range: w_range.as_deref(),
            empirical,
            probes,
            radius,
            seed,
            out: out.as_deref(),
        })
        .map(drop),
        Command::Compare {
            task,
            models,
            seeds,
            data_dir,
            iterations,
            out,
        } => compare::run(&compare::CompareArgs {
            tasks: &task,
            models: &models,
            seeds: &seeds,
            data_dir: &data_dir,
            iterations,
            out: out.as_deref(),
        })
        .map(drop),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
