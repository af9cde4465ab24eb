//! `invdisc`: runs scheme, comparison, differential-approximation and
//! invariance experiments described by JSON config files.
//!
//! Exit codes: 0 success, 1 config error, 2 early halt of a run, 3 failed
//! invariance checks.

mod commands;
mod config;
mod error;
mod invariance;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Status;
use crate::config::Experiment;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "invdisc", version, about = "Invariant difference scheme experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step a scheme and tabulate it against the reference solution.
    Solve(Args),
    /// Tabulate invariant against standard scheme errors.
    Compare(Args),
    /// Fit the expansion of a scheme equation and compare with its closed form.
    Diffapprox(Args),
    /// Run randomized invariance checks.
    Invariance(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent from both here and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed recorded in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(name: &'static str, args: &Args) -> Result<Status, CliError> {
    let mut exp = config::load(&args.config)?;
    if exp.name() != name {
        return Err(CliError::WrongExperiment {
            expected: name,
            found: exp.name(),
        });
    }
    exp.apply_overrides(args.seed, args.out.clone());
    let digest = exp.digest();
    match &exp {
        Experiment::Solve(c) => commands::solve(c, &digest),
        Experiment::Compare(c) => commands::compare(c, &digest),
        Experiment::Diffapprox(c) => commands::diffapprox(c, &digest),
        Experiment::Invariance(c) => invariance::invariance(c, &digest),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => execute("solve", a),
        Command::Compare(a) => execute("compare", a),
        Command::Diffapprox(a) => execute("diffapprox", a),
        Command::Invariance(a) => execute("invariance", a),
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
