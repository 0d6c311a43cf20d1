use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wexch::harness::{self, Experiment, ExperimentConfig, ExitStatus};

/// Weighted exchangeability experiments.
#[derive(Parser)]
#[command(name = "wexch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Added to every configured seed.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Directory for result.json and CSV traces.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the weight sequence against the sufficient and necessary conditions.
    CheckConditions(Common),
    /// Exhaustive enumeration checks on small joints.
    Verify(Common),
    /// Weighted law-of-large-numbers Monte Carlo.
    Lln(Common),
    /// Zero-one probe: exact truncated probability plus Monte Carlo.
    ZeroOne(Common),
    /// Per-replicate recovery of the latent mixture component.
    Recover(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::CheckConditions(c) => (Experiment::CheckConditions, c),
        Command::Verify(c) => (Experiment::Verify, c),
        Command::Lln(c) => (Experiment::Lln, c),
        Command::ZeroOne(c) => (Experiment::ZeroOne, c),
        Command::Recover(c) => (Experiment::Recover, c),
    };
    if let Ok(w) = std::env::var("WEXCH_WORKERS") {
        match w.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: WEXCH_WORKERS must be a positive integer, got `{w}`");
                return ExitCode::from(ExitStatus::Error.code() as u8);
            }
        }
    }
    let status = match execute(experiment, &common) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::Error
        }
    };
    ExitCode::from(status.code() as u8)
}

fn execute(experiment: Experiment, common: &Common) -> wexch::Result<ExitStatus> {
    let config = ExperimentConfig::load(&common.config)?;
    let outcome = harness::run(experiment, config, common.seed_offset)?;
    if let Some(dir) = &common.out {
        outcome.write_to(dir)?;
    }
    print!("{}", outcome.stdout);
    Ok(outcome.status)
}
