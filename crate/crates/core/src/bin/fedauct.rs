use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedauct::harness::{self, properties, ExperimentConfig, ExperimentKind, ResultTable};

#[derive(Parser)]
#[command(
    name = "fedauct",
    version,
    about = "Reputation-weighted reverse auctions for federated learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured mechanism on one generated market.
    Auction {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run multi-task rounds, resuming from and saving to a ledger file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment named by the config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomized economic-property suite.
    Properties {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(fedauct::Error),
    Violation(usize),
}

impl From<fedauct::Error> for Failure {
    fn from(e: fedauct::Error) -> Self {
        Failure::Config(e)
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    harness::apply_seed_env(&mut cfg)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(table: &ResultTable, out: &Path) -> Result<(), Failure> {
    table.write_csv_file(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Auction {
            config,
            budget,
            seed,
            out,
        } => {
            let mut cfg = load(&config, seed)?;
            if budget.is_some() {
                cfg.budget = budget;
            }
            cfg.validate()?;
            write(&harness::sweep::run_single_auction(&cfg)?, &out)
        }
        Command::Simulate {
            config,
            ledger,
            out,
        } => {
            let cfg = load(&config, None)?;
            write(&harness::simulate_with_ledger(&cfg, &ledger)?, &out)
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config, None)?;
            write(&harness::run_experiment(&cfg)?, &out)
        }
        Command::Properties { config, out } => {
            let mut cfg = match config {
                Some(p) => load(&p, None)?,
                None => {
                    let mut c = ExperimentConfig::for_kind(ExperimentKind::PropertySuite);
                    harness::apply_seed_env(&mut c)?;
                    c
                }
            };
            cfg.kind = ExperimentKind::PropertySuite;
            cfg.validate()?;
            let report = properties::property_report(&cfg)?;
            write(&properties::report_rows(&cfg, &report)?, &out)?;
            if let Some(r) = report.complexity_ratio {
                eprintln!(
                    "selection time ratio {:?}: {r:.3}",
                    cfg.properties.complexity_sizes
                );
            }
            match report.total_violations() {
                0 => Ok(()),
                n => Err(Failure::Violation(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(n)) => {
            eprintln!("property suite: {n} violation(s)");
            ExitCode::from(2)
        }
    }
}
