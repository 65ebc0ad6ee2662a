// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

/// Tumor cord growth toolkit: stationary profiles, equilibrium widths, and
/// the full moving-boundary evolution.
#[derive(Debug, Parser)]
#[command(name = "cordsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print and save the derived admissibility constants.
    Constants(CommonArgs),
    /// Solve the transverse stationary profiles at a fixed width.
    Stationary(CommonArgs),
    /// Solve the equilibrium width and reconstruct the first-order profiles.
    Width(CommonArgs),
    /// Run the time-dependent moving-boundary simulation.
    Evolve(CommonArgs),
    /// Solve the equilibrium width over a parameter grid.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub(crate) struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub(crate) config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    pub(crate) out: PathBuf,
    /// Concurrent sweep entries.
    #[arg(long, default_value_t = 1)]
    pub(crate) jobs: usize,
    /// Validate the configuration and print the plan without computing.
    #[arg(long)]
    pub(crate) dry_run: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Constants(args) => commands::constants(args),
        Command::Stationary(args) => commands::stationary(args),
        Command::Width(args) => commands::width(args),
        Command::Evolve(args) => commands::evolve(args),
        Command::Sweep(args) => commands::sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
