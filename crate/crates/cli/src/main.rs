//! `asep-lab`: command-line front end for the ASEP numerics library.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use output::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] asep_core::Error),
}

impl CliError {
    /// 2 for numerical non-convergence, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "asep-lab", version, about = "Exact and Monte Carlo numerics for ASEP on the integer lattice")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Right-jump rate; the left rate is 1 - p.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Density of the step Bernoulli initial condition (1 = step).
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo samples of the m-th particle position at process time t.
    Simulate(commands::SimulateArgs),
    /// N-particle transition probability from the contour-integral formula.
    Exact(commands::ExactArgs),
    /// Residuals of the algebraic identities at random complex points.
    Identities(commands::IdentitiesArgs),
    /// Tracy-Widom F1, F2 and densities on a grid, or their moments.
    Tw(commands::TwArgs),
    /// Finite-time CDF of the m-th particle from the Fredholm determinant.
    Cdf(commands::CdfArgs),
    /// KS ladder of the scaled m-th particle against its limit law.
    ConvergeParticle(commands::ConvergeParticleArgs),
    /// KS ladder of the scaled current against its limit law.
    ConvergeCurrent(commands::ConvergeCurrentArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Exact(_) => "exact",
            Command::Identities(_) => "identities",
            Command::Tw(_) => "tw",
            Command::Cdf(_) => "cdf",
            Command::ConvergeParticle(_) => "converge-particle",
            Command::ConvergeCurrent(_) => "converge-current",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            // clap's usage errors would exit with 2, which is reserved here.
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("asep-lab {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
