//! The `kout` command line: sampling, exact total variation tables,
//! threshold experiments, LCLT checks, moments and the limit constant.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand};

use config::{Flags, Settings};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "kout", version, about = "Preferential-attachment vs uniform k-out mappings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw digraphs as "v i target" lines or JSON.
    Sample(Flags),
    /// Exact total variation, full and of the sum of squared in-degrees.
    ExactTv(Flags),
    /// Both TV estimators across an (n, alpha) grid.
    Threshold(Flags),
    /// Lattice local limit sup error.
    Lclt(Flags),
    /// In-degree moments.
    Moments(Flags),
    /// The limiting TV constant at alpha = beta sqrt(n).
    Limit(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Sample(f) => ("sample", f),
            Command::ExactTv(f) => ("exact-tv", f),
            Command::Threshold(f) => ("threshold", f),
            Command::Lclt(f) => ("lclt", f),
            Command::Moments(f) => ("moments", f),
            Command::Limit(f) => ("limit", f),
        }
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("kout: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let (name, flags) = cli.command.parts();
    let settings = Settings::resolve(name, flags)?;
    let outcome = commands::run(&settings)?;
    output::emit(&outcome.text, settings.out.as_deref())?;
    match outcome.failed_check {
        Some(msg) => Err(error::CliError::CheckFailed(msg)),
        None => Ok(()),
    }
}
