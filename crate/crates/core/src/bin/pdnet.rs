use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdnet::harness::{self, ExperimentConfig};
use pdnet::Error;

/// Distributed primal-dual subgradient simulator.
#[derive(Parser)]
#[command(name = "pdnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (alternative to the positional argument).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV trace destination.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the number of rounds.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// Override the seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Check the iteration relations every round.
    #[arg(long, global = true)]
    debug_asserts: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its trace.
    Run {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Check graph assumptions and step sizes without running.
    Validate {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Print the reference solution of `num`, `quadratic` or `custom:<file>`.
    Oracle { problem: String },
}

fn load(cli: &Cli, positional: &Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    let path = positional
        .as_ref()
        .or(cli.config.as_ref())
        .ok_or_else(|| Error::Config(vec!["no config file given".into()]))?;
    let mut cfg = harness::load_config(path)?;
    if let Some(r) = cli.rounds {
        if r == 0 {
            return Err(Error::Config(vec!["--rounds must be at least 1".into()]));
        }
        cfg.rounds = r;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.debug_asserts |= cli.debug_asserts;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Run { path } => {
            let cfg = load(cli, path)?;
            let exp = harness::run_experiment(&cfg)?;
            println!("{}", exp.summary);
            Ok(true)
        }
        Command::Validate { path } => {
            let cfg = load(cli, path)?;
            let outcome = harness::validate(&cfg)?;
            println!("{outcome}");
            Ok(outcome.is_ok())
        }
        Command::Oracle { problem } => {
            print!("{}", harness::oracle_report(&harness::parse_problem_choice(problem)?)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
