//! `aloha`: design, evaluate and simulate incentive schemes for
//! slotted-Aloha access from a JSON scenario file.

mod commands;
mod config;
mod error;
mod figures;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ConfigFile;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "aloha",
    version,
    about = "Pricing and intervention for slotted-Aloha users"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the config's sim block.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the designed rule, the branch each user falls in and any roots.
    Design,
    /// Compute (or take from `actions`) an action profile and certify it.
    Equilibrium,
    /// Expected outcome of the scenario as a results row.
    Evaluate,
    /// Results rows for every user count of the sweep block.
    Sweep,
    /// User count at which pricing overtakes intervention.
    Threshold,
    /// Exhaustive search over symmetric affine intervention rules.
    Search,
    /// Monte Carlo run next to the analytic expectations.
    Simulate,
    /// Table behind one of the nine figures.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=9))]
        id: u8,
    },
}

fn load(cli: &Cli) -> Result<ConfigFile, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    ConfigFile::load(path)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Design => commands::design(&load(cli)?),
        Command::Equilibrium => commands::equilibrium(&load(cli)?),
        Command::Evaluate => commands::evaluate(&load(cli)?),
        Command::Sweep => commands::sweep(&load(cli)?),
        Command::Threshold => commands::threshold(&load(cli)?),
        Command::Search => commands::search(&load(cli)?),
        Command::Simulate => commands::simulate(&load(cli)?, cli.seed),
        Command::Figure { id } => {
            let users = match &cli.config {
                Some(path) => ConfigFile::load(path)?.sweep.map(|s| s.n_from..=s.n_to),
                None => None,
            };
            figures::figure(*id, users)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|text| table::emit(&text, cli.out.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aloha: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
