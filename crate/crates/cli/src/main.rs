//! `chtn` — random walks of bipartite spins on a layered network, with a
//! verification pipeline for the induced hyperbolic metric.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical instability, 4 domain error.

// Validation guards are written `!(x > 0)` rather than `x <= 0` so that NaN
// inputs are rejected alongside non-positive ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use chtn::Error;
use config::Overrides;

#[derive(Parser)]
#[command(
    name = "chtn",
    version,
    about = "Diffusion on a layered spin network and its induced metric",
    arg_required_else_help = true
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the network; write its description and action summary.
    Build {
        /// Also write the assembled operator as a triplet listing.
        #[arg(long)]
        emit_operator: bool,
        /// Also compare the incidence-built operator against the stencil
        /// assembly (on the truncated twin of the configured lattice).
        #[arg(long)]
        reconcile: bool,
    },
    /// Compute a steady state by the configured route.
    Steady,
    /// Relax a seeded random field, writing periodic snapshots.
    Evolve,
    /// Compute the induced metric of a stored field.
    Metric {
        /// Field CSV to read (default: <out>/field.csv).
        #[arg(long, value_name = "PATH")]
        field: Option<PathBuf>,
    },
    /// Run the verification pipeline; write consolidated pass/fail results.
    Verify,
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_)
        | Error::Unsupported(_)
        | Error::Dimension(_)
        | Error::Parse(_)
        | Error::Io(_) => 2,
        Error::Unstable { .. } => 3,
        Error::Domain(_) | Error::SiteOutOfRange { .. } => 4,
    }
}

fn run(cli: Cli) -> chtn::Result<i32> {
    let cfg = cli.overrides.resolve()?;
    match cli.command {
        Command::Build {
            emit_operator,
            reconcile,
        } => commands::cmd_build(&cfg, emit_operator, reconcile),
        Command::Steady => commands::cmd_steady(&cfg),
        Command::Evolve => commands::cmd_evolve(&cfg),
        Command::Metric { field } => commands::cmd_metric(&cfg, field),
        Command::Verify => commands::cmd_verify(&cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
