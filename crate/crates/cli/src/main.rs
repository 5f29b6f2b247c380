//! `reram`: runs TOML experiment files and writes self-describing CSV.

mod commands;
mod manifest;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use manifest::Manifest;

#[derive(Debug, Parser)]
#[command(name = "reram", version, about = "Sneak-path channel, capacity and coded BER experiments for crossbar memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower and upper capacity bounds over a q grid.
    Capacity(CommonArgs),
    /// Binned PMF of the sneak-path rate per T.
    Pmf(CommonArgs),
    /// BER sweep of a coded storage experiment.
    Ber {
        #[command(flatten)]
        common: CommonArgs,
        /// Maximum trials per σ point.
        #[arg(long)]
        trials_cap: Option<u64>,
        /// Bit errors after which a σ point stops.
        #[arg(long)]
        errors_target: Option<u64>,
    },
    /// MSE of the per-array sneak-rate estimate against the average rate.
    Estimate(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Component(#[from] reram::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Component(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("reram: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Capacity(c) => ("capacity", c),
        Command::Pmf(c) => ("pmf", c),
        Command::Ber { common, .. } => ("ber", common),
        Command::Estimate(c) => ("estimate", c),
    };
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", common.config.display())))?;

    let (resolved, seed, body) = match &cli.command {
        Command::Capacity(_) => commands::capacity(&text, common.seed)?,
        Command::Pmf(_) => commands::pmf(&text, common.seed)?,
        Command::Ber { trials_cap, errors_target, .. } => commands::ber(&text, common.seed, *trials_cap, *errors_target)?,
        Command::Estimate(_) => commands::estimate(&text, common.seed)?,
    };

    let manifest = Manifest {
        subcommand: name,
        config_path: common.config.display().to_string(),
        seed,
        output: common.out.as_ref().map_or_else(|| "stdout".to_string(), |p| p.display().to_string()),
        threads: rayon::current_num_threads(),
        resolved_config: resolved,
    };
    let document = format!("{}{body}", manifest.render());
    match &common.out {
        Some(path) => fs::write(path, document)
            .map_err(|source| CliError::Output { path: path.display().to_string(), source }),
        None => io::stdout()
            .write_all(document.as_bytes())
            .map_err(|source| CliError::Output { path: "stdout".into(), source }),
    }
}
