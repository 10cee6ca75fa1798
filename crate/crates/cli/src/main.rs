//! Command-line driver for BASE-PC experiments.

mod config;
mod driver;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "basepc", version, about = "Basis- and sample-adaptive polynomial chaos experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write its CSV and JSON log.
    Run(Common),
    /// Run every listed method and join the results by sample count.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    config: PathBuf,
    /// Base seed; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report the reference RRMSE on this many independent points.
    #[arg(long = "ref-rrmse", value_name = "N")]
    ref_rrmse: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let over = Overrides { seed: self.seed, out: self.out.clone(), n_ref: self.ref_rrmse };
        ExperimentConfig::load(&self.config, &over)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => c.load().and_then(|cfg| driver::run(&cfg)),
        Command::Compare(c) => c.load().and_then(|cfg| driver::compare(&cfg)),
    };
    match result {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("basepc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
