mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "gtsp", version, about = "Traveling-salesman solver: descent, patching, matching neighborhoods, aav search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Write the JSON run report here.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "GTSP_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Seed for generated instances (`random:N`, `random-sym:N`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Add wall-clock timings to the output and report.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimal derangement by negative-cycle descent.
    Assignment { instance: String },
    /// Descent followed by cycle patching.
    Upperbound {
        instance: String,
        /// Patch beam width; defaults from the cycle count.
        #[arg(long)]
        beam: Option<usize>,
    },
    /// Upper bound, then an improvement stage.
    Solve {
        instance: String,
        #[arg(long, value_enum, default_value_t = Mode::Matching)]
        mode: Mode,
        /// Paths kept per column by h1; 0 keeps all.
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Beam width for h2.
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        beam: Option<usize>,
        /// Matching mode: search whole neighborhoods before stopping.
        #[arg(long)]
        exhaustive: bool,
        /// Also compute the optimum with Held-Karp.
        #[arg(long)]
        oracle: bool,
    },
    /// Reference optimum.
    Oracle {
        instance: String,
        #[arg(long, value_enum, default_value_t = Method::Dp)]
        method: Method,
    },
    /// Value and aav of a tour given as `1,2,...,n`.
    Verify { instance: String, tour: String },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Matching,
    Exact,
    H1,
    H2,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Brute,
    Dp,
    Hungarian,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Instance(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Instance(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<gtsp_core::Error> for CliError {
    fn from(e: gtsp_core::Error) -> Self {
        match e {
            gtsp_core::Error::Invariant(_) | gtsp_core::Error::IterationLimit(_) => CliError::Invariant(e.to_string()),
            other => CliError::Instance(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
