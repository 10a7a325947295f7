//! Single-task contribution studies: label noise and missing labels.

use std::collections::BTreeSet;

use super::config::{ExperimentConfig, ExperimentKind};
use super::table::ResultTable;
use crate::flsim::{
    generate_population, run_task, SyntheticTaskSpec, TaskInput, TaskLog, WorkerDataProfile,
};
use crate::reputation::ReputationLedger;
use crate::{Error, Result, WorkerId};

pub const CASE_WORKERS: usize = 10;

/// Case 1: iid workers with data accuracy 1.0, 0.9, ..., 0.1.
pub fn case1_profiles() -> Vec<WorkerDataProfile> {
    (0..CASE_WORKERS)
        .map(|i| WorkerDataProfile::iid((CASE_WORKERS - i) as f64 / 10.0))
        .collect()
}

/// Case 2: worker 0 sees every label, worker `i > 0` lacks label `i - 1`.
pub fn case2_profiles(classes: usize) -> Vec<WorkerDataProfile> {
    (0..CASE_WORKERS)
        .map(|i| WorkerDataProfile {
            data_accuracy: 1.0,
            missing_labels: if i == 0 {
                BTreeSet::new()
            } else {
                BTreeSet::from([(i - 1) % classes])
            },
        })
        .collect()
}

/// Runs one task with every case worker selected.
pub fn run_case(cfg: &ExperimentConfig, profiles: &[WorkerDataProfile]) -> Result<TaskLog<f64>> {
    let spec = SyntheticTaskSpec {
        local_epochs: cfg.case_local_epochs,
        ..cfg.task_spec()
    };
    let population = generate_population(&spec, profiles)?;
    let winners: Vec<WorkerId> = (0..profiles.len() as u32).map(WorkerId).collect();
    let mut ledger =
        ReputationLedger::with_workers(winners.iter().copied(), cfg.reputation.re_init);
    let input = TaskInput {
        task_id: 0,
        spec: &spec,
        population: &population,
        winners: &winners,
        params: &cfg.reputation,
        settlement: None,
    };
    run_task(&input, &mut ledger)
}

/// Worker 0's contribution minus the mean of the others.
pub fn worker0_gap(per_worker: &std::collections::BTreeMap<WorkerId, f64>) -> f64 {
    let first = per_worker[&WorkerId(0)];
    let rest: Vec<f64> = per_worker
        .iter()
        .filter(|(w, _)| w.0 != 0)
        .map(|(_, v)| *v)
        .collect();
    first - rest.iter().sum::<f64>() / rest.len().max(1) as f64
}

pub fn run_contribution_cases(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let (profiles, x_name) = match cfg.kind {
        ExperimentKind::ContributionCase1 => (case1_profiles(), "data_accuracy"),
        ExperimentKind::ContributionCase2 => (case2_profiles(cfg.task.num_classes), "worker"),
        other => {
            return Err(Error::Config(format!(
                "{} is not a contribution case",
                other.name()
            )))
        }
    };
    let log = run_case(cfg, &profiles)?;
    let id = cfg.id();
    let mut table = ResultTable::new();
    for (name, contrib) in [
        ("ours", &log.contribution.per_worker),
        ("equal_weight", &log.equal_weight_contribution.per_worker),
    ] {
        for (w, v) in contrib {
            let x = match cfg.kind {
                ExperimentKind::ContributionCase1 => profiles[w.0 as usize].data_accuracy,
                _ => w.0 as f64,
            };
            table.push(&id, name, x_name, x, "contribution", *v, cfg.seed)?;
        }
        if cfg.kind == ExperimentKind::ContributionCase2 {
            table.push(
                &id,
                name,
                "worker",
                0.0,
                "worker0_gap",
                worker0_gap(contrib),
                cfg.seed,
            )?;
        }
    }
    Ok(table)
}
