//! Command-line front end: `validate`, `simulate`, `verify` and `oracle`.
//!
//! Exit codes: 0 success, 1 input error, 2 a check failed, 3 infrastructure
//! error (thread pool, file system).

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{oracle, simulate, validate, verify};
pub use config::{ConfigFile, Overrides, RunConfig, Tolerances, DEFAULT_TESTS, TEST_IDS};

use crate::simulate::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InputError = 1,
    CheckFailed = 2,
    InfrastructureError = 3,
}

/// A command that stopped early, with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub status: ExitStatus,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { status: ExitStatus::InputError, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Failure { status: ExitStatus::CheckFailed, message: message.into() }
    }

    pub fn infrastructure(message: impl Into<String>) -> Self {
        Failure { status: ExitStatus::InfrastructureError, message: message.into() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rwre", version, about = "Random walk in a dynamical random environment: simulation and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file against the five kernel conditions.
    Validate(RunArgs),
    /// Sample an ensemble and write terminal positions and a summary.
    Simulate(RunArgs),
    /// Run the verification pipeline.
    Verify(RunArgs),
    /// Exact laws and second moments up to a small horizon.
    Oracle(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model file (TOML).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    env_seed: Option<u64>,
    /// Master seed of the walker streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon T.
    #[arg(short = 'T', long = "horizon")]
    horizon: Option<u64>,
    /// Number of walkers M.
    #[arg(short = 'M', long = "walkers")]
    walkers: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// quenched or annealed.
    #[arg(long)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of the verify checks.
    #[arg(long, value_delimiter = ',')]
    tests: Option<Vec<String>>,
    /// Override a threshold, e.g. `--tolerance covariance=0.05`.
    #[arg(long = "tolerance", value_name = "KEY=VAL")]
    tolerance: Vec<String>,
    /// Largest horizon the exact oracle accepts.
    #[arg(long)]
    cap: Option<u64>,
}

impl RunArgs {
    fn resolve(self, default_horizon: Option<u64>) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(path) => Some(ConfigFile::load(path).map_err(|e| Failure::input(e.to_string()))?),
            None => None,
        };
        let flags = Overrides {
            model: self.model,
            env_seed: self.env_seed,
            master_seed: self.seed,
            horizon: self.horizon,
            walkers: self.walkers,
            workers: self.workers,
            mode: self.mode,
            out: self.out,
            tests: self.tests,
            cap: self.cap,
            tolerance: self.tolerance,
        };
        RunConfig::resolve(file, flags, default_horizon).map_err(|e| Failure::input(e.to_string()))
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::InputError as i32 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => a.resolve(None).and_then(|c| validate(&c)),
        Command::Simulate(a) => a.resolve(Some(config::DEFAULT_HORIZON)).and_then(|c| simulate(&c)),
        Command::Verify(a) => a.resolve(Some(config::DEFAULT_HORIZON)).and_then(|c| verify(&c)),
        Command::Oracle(a) => a.resolve(None).and_then(|c| oracle(&c)),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.status as i32
        }
    }
}
