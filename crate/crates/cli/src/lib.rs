//! Command-line front end for `actsched`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod output;
pub mod problem;

pub use problem::{Overrides, ProblemFile, ProblemOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("validation failed: {0}")]
    Validation(actsched::Error),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Check(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<actsched::Error> for CliError {
    fn from(e: actsched::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "actsched", version, about = "Optimal actuator schedules for LTI systems")]
pub struct Cli {
    /// Worker threads for per-actuator work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SystemFlags {
    /// Grid cells per actuator.
    #[arg(long)]
    pub k: Option<usize>,
    /// Relative tolerance for equal profile values.
    #[arg(long)]
    pub tie_tol: Option<f64>,
    /// Measure slack for flat-interval detection.
    #[arg(long)]
    pub flat_tol: Option<f64>,
    /// Delete zero columns of B, keeping the original actuator labels.
    #[arg(long)]
    pub drop_zero_columns: bool,
    /// Keep zero columns of B as actuators with a zero profile.
    #[arg(long, conflicts_with = "drop_zero_columns")]
    pub keep_zero_columns: bool,
}

impl SystemFlags {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            k: self.k,
            tie_tol: self.tie_tol,
            flat_tol: self.flat_tol,
            drop_zero_columns: self.drop_zero_columns,
            keep_zero_columns: self.keep_zero_columns,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and write report.json, schedule.json, profile.csv
    /// and rearranged.csv.
    Solve {
        input: PathBuf,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        flags: SystemFlags,
    },
    /// Decreasing rearrangement of a uniformly sampled function (CSV "t,f").
    Rearrange {
        input: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        tie_tol: Option<f64>,
    },
    /// Compare the solver against the discretized knapsack optimum.
    Oracle {
        input: PathBuf,
        #[command(flatten)]
        flags: SystemFlags,
    },
    /// Run the property checks on a problem file, a schedule, or seeded
    /// random instances.
    Verify {
        input: Option<PathBuf>,
        /// Check this schedule against the problem's budget instead of solving.
        #[arg(long, requires = "input")]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances when no input is given.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        flags: SystemFlags,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    match cli.command {
        Command::Solve { input, out, flags } => commands::solve(&input, &out, &flags.overrides()),
        Command::Rearrange { input, out, tie_tol } => commands::rearrange(&input, out.as_deref(), tie_tol),
        Command::Oracle { input, flags } => commands::oracle(&input, &flags.overrides()),
        Command::Verify {
            input,
            schedule,
            seed,
            trials,
            flags,
        } => commands::verify(input.as_deref(), schedule.as_deref(), seed, trials, &flags.overrides()),
    }
}
