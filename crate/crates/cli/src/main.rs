//! `qevo`: reproducible experiment runner for the training toolkit.
//!
//! Every run is described by a JSON config file; the subcommand picks the
//! mode and must agree with the config's own `mode` field. Identical config
//! and seed give byte-identical trace artifacts, regardless of `--threads`.

mod config;
mod runner;

use clap::{Args, Parser, Subcommand};
use config::Mode;
use std::path::PathBuf;
use std::process::ExitCode;

/// Failure classes, mapped to exit codes: anything the config asked for
/// that is malformed or out of bounds exits 2, failures while executing a
/// valid configuration (I/O, unreadable model files, non-convergence) exit 1.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Runtime(String),
}

pub type AppResult<T> = Result<T, AppError>;

#[derive(Parser)]
#[command(
    name = "qevo",
    version,
    about = "Evolutionary training and synthesis of variational quantum circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a variational circuit to minimize a Hamiltonian expectation
    Vqe(RunArgs),
    /// Fit a circuit to a target unitary, then polish to machine precision
    Synth(RunArgs),
    /// Exact ground-space diagonalization of the configured model
    Eig(RunArgs),
    /// Dense single-parameter cross-section of the cost landscape
    Scan(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory (default: the config's `out`, then the working directory)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the configured optimizer.master_seed
    #[arg(long)]
    seed: Option<u64>,

    /// Worker thread count; affects wall time only, never results
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Vqe(a) => (Mode::Vqe, a),
        Command::Synth(a) => (Mode::Synth, a),
        Command::Eig(a) => (Mode::Eig, a),
        Command::Scan(a) => (Mode::Scan, a),
    };
    let invocation = runner::Invocation {
        mode,
        config_path: args.config,
        out: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    match runner::execute(&invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
