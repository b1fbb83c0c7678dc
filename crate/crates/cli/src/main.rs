//! `fdnet`: simulate functional data, fit sparse ReLU networks to the
//! pointwise means, score them, and run the replication studies.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
//! 4 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<fdnet::Error> for CliError {
    fn from(e: fdnet::Error) -> Self {
        use fdnet::Error as E;
        let code = match &e {
            E::InvalidArgument(_) | E::OutOfRange(_) | E::DimensionMismatch { .. } | E::DenseLimit { .. } => EXIT_USAGE,
            E::Io(_) | E::Csv(_) | E::Format(_) => EXIT_IO,
            E::NotPsd { .. } | E::NoConvergence { .. } | E::Numerical(_) | E::Diverged { .. } => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fdnet", version, about = "Deep ReLU network estimation of functional-data mean functions")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config with [simulate], [network], [train], [experiment] and
    /// [spectrum] sections
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for relative output paths
    #[arg(long, global = true, env = "FDNET_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a functional dataset
    Simulate(commands::SimulateArgs),
    /// Fit a network to a dataset's pointwise means
    Train(commands::TrainArgs),
    /// Empirical L2 risk of a fitted network against a mean function
    Eval(commands::EvalArgs),
    /// Largest kernel-matrix eigenvalue over a sweep of grid sizes
    Spectrum(commands::SpectrumArgs),
    /// Replication study over a preset's (sigma, N, n) sweep
    Experiment(commands::ExperimentArgs),
    /// Wrap a raw subject-major f64 stack as a dataset file
    Ingest(commands::IngestArgs),
    /// Evaluate a fitted network on a new grid
    Predict(commands::PredictArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
