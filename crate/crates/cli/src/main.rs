use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gch_cli::commands::{cmd_compare, cmd_simulate, cmd_verify, load};
use gch_cli::Result;

#[derive(Parser)]
#[command(name = "gch", version, about = "Generalized Camassa-Holm solvers and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured solvers and write snapshots.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run the verification suite on a Lagrangian run.
    Verify {
        #[arg(short, long)]
        config: PathBuf,
        /// Directory of a previous `simulate` run; runs inline when absent.
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Run two or more solvers and report their distances.
    Compare {
        #[arg(short, long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config } => {
            print!("{}", cmd_simulate(&load(&config)?)?);
            Ok(true)
        }
        Command::Verify { config, run_dir } => {
            let v = cmd_verify(&load(&config)?, run_dir.as_deref())?;
            print!("{}", v.text);
            Ok(v.report.passed)
        }
        Command::Compare { config } => {
            let (_, table) = cmd_compare(&load(&config)?)?;
            print!("{table}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
