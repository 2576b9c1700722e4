//! `dissvqe` command line.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use runner::RunError;

#[derive(Parser)]
#[command(name = "dissvqe", version = runner::VERSION, about = "Dissipative VQE experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its outputs.
    Run { config: PathBuf },
    /// Check a config and print it with defaults filled in.
    Validate { config: PathBuf },
    /// Print the artifact version.
    Version,
}

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn load(path: &PathBuf) -> Result<config::ExperimentConfig, RunError> {
    config::load_config(path)
        .map(config::ExperimentConfig::with_env_override)
        .map_err(RunError::Config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = match &cli.command {
        Command::Run { config } | Command::Validate { config } => Some(config.clone()),
        Command::Version => None,
    };
    let result = match cli.command {
        Command::Version => {
            println!("dissvqe {}", runner::VERSION);
            Ok(())
        }
        Command::Validate { config } => load(&config).map(|c| {
            println!("{}", serde_json::to_string_pretty(&c).expect("config serializes"));
            println!("config_sha256={}", c.hash());
        }),
        Command::Run { config } => load(&config).and_then(|c| {
            let dir = runner::run(&c).map_err(|e| match e {
                RunError::Numerical(m) => RunError::Numerical(format!("{m} (seed {})", c.seed)),
                other => other,
            })?;
            println!("wrote {}", dir.display());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match (&e, &path) {
                (RunError::Config(_), Some(p)) => eprintln!("error: {}: {e}", p.display()),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::Numerical(_) => EXIT_NUMERICAL,
                RunError::Failed(_) => EXIT_FAILED,
            })
        }
    }
}
