//! Experiment configuration, orchestration and result output.

pub mod cases;
pub mod config;
pub mod ledger_io;
pub mod multitask;
pub mod properties;
pub mod sweep;
pub mod table;

use std::path::Path;

pub use cases::run_contribution_cases;
pub use config::{ExperimentConfig, ExperimentKind};
pub use ledger_io::{read_ledger, write_ledger};
pub use multitask::run_multitask;
pub use properties::run_property_suite;
pub use sweep::run_auction_sweep;
pub use table::{ResultRow, ResultTable};

use crate::reputation::ReputationLedger;
use crate::{Error, Result, WorkerId};

pub const SEED_ENV: &str = "FEDAUCT_SEED";

/// Applies `FEDAUCT_SEED` if set.
pub fn apply_seed_env(cfg: &mut ExperimentConfig) -> Result<()> {
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an unsigned integer")))?;
    }
    Ok(())
}

/// Runs whichever experiment the config names.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.kind {
        ExperimentKind::AuctionSweepBudget | ExperimentKind::AuctionSweepWorkers => {
            run_auction_sweep(cfg)
        }
        ExperimentKind::MultiTask => run_multitask(cfg),
        ExperimentKind::ContributionCase1 | ExperimentKind::ContributionCase2 => {
            run_contribution_cases(cfg)
        }
        ExperimentKind::PropertySuite => run_property_suite(cfg),
    }
}

/// Continues a multi-task run from the ledger at `ledger_path` with the first
/// configured mechanism, then writes the updated ledger back. Task ids pick
/// up after the last one recorded in the ledger.
pub fn simulate_with_ledger(cfg: &ExperimentConfig, ledger_path: &Path) -> Result<ResultTable> {
    if cfg.kind != ExperimentKind::MultiTask {
        return Err(Error::Config(format!(
            "simulate needs a multi_task config, got {}",
            cfg.kind.name()
        )));
    }
    cfg.validate()?;
    let world = multitask::build_world(cfg)?;
    let mut ledger: ReputationLedger<f64> = read_ledger(ledger_path)?;
    if ledger.is_empty() {
        ledger = ReputationLedger::with_workers(
            (0..world.bids.len() as u32).map(WorkerId),
            cfg.reputation.re_init,
        );
    }
    let first_task = ledger
        .records
        .values()
        .flat_map(|r| r.history.iter().map(|h| h.task + 1))
        .max()
        .unwrap_or(0);
    let mechanism = cfg.mechanisms[0];
    let run = multitask::run_tasks(cfg, &world, mechanism, &mut ledger, first_task)?;
    let summary = multitask::summarize(&run, cfg.discard, &cfg.group_window);
    let mut table = ResultTable::new();
    multitask::push_run_rows(&mut table, cfg, &run, &summary)?;
    write_ledger(ledger_path, &ledger)?;
    Ok(table)
}
