//! Sequential tasks with a persistent reputation ledger.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, GroupWindow};
use super::table::ResultTable;
use crate::auction::{AuctionConfig, Bid, Mechanism};
use crate::flsim::{
    generate_population, run_task, LogisticModel, Population, Settlement, SyntheticTaskSpec,
    TaskInput, WorkerDataProfile,
};
use crate::reputation::ReputationLedger;
use crate::{seed, Result, WorkerId};

const STREAM_BIDS: u64 = 0x4249_4453;
const STREAM_AUCTION: u64 = 0x4155_4354;

/// Workers, their data and their fixed bids; shared by every mechanism.
#[derive(Debug, Clone)]
pub struct World {
    pub spec: SyntheticTaskSpec,
    pub population: Population<f64>,
    pub accuracies: Vec<f64>,
    pub bids: Vec<Bid<f64>>,
}

pub fn build_world(cfg: &ExperimentConfig) -> Result<World> {
    let spec = cfg.task_spec();
    let accuracies: Vec<f64> = cfg
        .groups
        .iter()
        .flat_map(|g| std::iter::repeat_n(g.accuracy, g.count))
        .collect();
    let profiles: Vec<WorkerDataProfile> = accuracies
        .iter()
        .map(|&a| WorkerDataProfile::iid(a))
        .collect();
    let population = generate_population(&spec, &profiles)?;
    let mut rng = seed::rng(cfg.seed, &[STREAM_BIDS]);
    let m = &cfg.market;
    let bids = accuracies
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let off = if m.bid_offset.low < m.bid_offset.high {
                rng.random_range(m.bid_offset.low..m.bid_offset.high)
            } else {
                m.bid_offset.low
            };
            // Reported bids are taken as true costs.
            Bid::truthful(WorkerId(i as u32), m.bid_slope * a + off)
        })
        .collect();
    Ok(World {
        spec,
        population,
        accuracies,
        bids,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinnerRecord {
    pub worker: WorkerId,
    pub accuracy: f64,
    pub contribution: f64,
    pub internal: f64,
    pub payment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task_id: u64,
    pub winners: Vec<WinnerRecord>,
    /// Accumulated reputation of every worker after the task, by worker index.
    pub accumulated_after: Vec<f64>,
    pub final_validation_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskRun {
    pub mechanism: Mechanism,
    pub accuracies: Vec<f64>,
    pub tasks: Vec<TaskRecord>,
}

/// Runs `cfg.tasks` tasks under one mechanism. Task ids start at
/// `first_task`. Workers whose accumulated reputation has reached zero can no
/// longer be ranked and sit out.
pub fn run_tasks(
    cfg: &ExperimentConfig,
    world: &World,
    mechanism: Mechanism,
    ledger: &mut ReputationLedger<f64>,
    first_task: u64,
) -> Result<MultiTaskRun> {
    let auction = AuctionConfig::new(cfg.effective_budget())?;
    let params = &cfg.reputation;
    let n = world.accuracies.len();
    let untrained = LogisticModel::zeros(world.population.classes, world.spec.feature_dim);
    let mut tasks = Vec::with_capacity(cfg.tasks);
    for t in 0..cfg.tasks as u64 {
        let task_id = first_task + t;
        let reps: BTreeMap<WorkerId, f64> = world
            .bids
            .iter()
            .map(|b| (b.worker, ledger.accumulated(b.worker, params)))
            .filter(|(_, re)| *re > 0.0)
            .collect();
        let eligible: Vec<Bid<f64>> = world
            .bids
            .iter()
            .filter(|b| reps.contains_key(&b.worker))
            .copied()
            .collect();
        let outcome = if eligible.is_empty() {
            None
        } else {
            let s = seed::derive(cfg.seed, &[STREAM_AUCTION, task_id]);
            Some(mechanism.select(&eligible, &reps, &auction, s)?)
        };

        let mut record = TaskRecord {
            task_id,
            winners: Vec::new(),
            accumulated_after: Vec::new(),
            final_validation_loss: untrained.loss(&world.population.validation),
            test_accuracy: untrained.accuracy(&world.population.test),
        };
        if let Some(outcome) = outcome.filter(|o| !o.winners.is_empty()) {
            let input = TaskInput {
                task_id,
                spec: &world.spec,
                population: &world.population,
                winners: &outcome.winners,
                params,
                settlement: Some(Settlement {
                    mechanism,
                    outcome: &outcome,
                    config: &auction,
                }),
            };
            let log = run_task(&input, ledger)?;
            record.winners = log
                .winners
                .iter()
                .map(|w| WinnerRecord {
                    worker: *w,
                    accuracy: world.accuracies[w.0 as usize],
                    contribution: log.contribution.per_worker[w],
                    internal: log.internal[w],
                    payment: log.payments[w],
                })
                .collect();
            record.final_validation_loss = log.final_validation_loss;
            record.test_accuracy = log.test_accuracy;
        }
        record.accumulated_after = (0..n)
            .map(|i| ledger.accumulated(WorkerId(i as u32), params))
            .collect();
        tasks.push(record);
    }
    Ok(MultiTaskRun {
        mechanism,
        accuracies: world.accuracies.clone(),
        tasks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub accuracy: f64,
    pub workers: usize,
    /// Winning instances in the window.
    pub wins: usize,
    /// Mean over winning instances; `None` if the group never won.
    pub mean_contribution: Option<f64>,
    /// Mean accumulated reputation after each task, over all group members.
    pub mean_reputation: f64,
    /// Mean over winning instances; `None` if the group never won.
    pub mean_payment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskSummary {
    pub mechanism: Mechanism,
    pub groups: Vec<GroupSummary>,
    pub scored_tasks: usize,
    /// Share of winners, over scored tasks, that hold the cleanest data.
    pub top_accuracy_proportion: f64,
    pub mean_final_loss: f64,
}

pub fn summarize(run: &MultiTaskRun, discard: usize, window: &GroupWindow) -> MultiTaskSummary {
    let scored = &run.tasks[discard.min(run.tasks.len())..];
    let group_tasks = match window {
        GroupWindow::All => &run.tasks[..],
        GroupWindow::Scored => scored,
    };
    let mut levels: Vec<f64> = run.accuracies.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let top = levels.last().copied().unwrap_or(1.0);

    let groups = levels
        .iter()
        .map(|&a| {
            let members: Vec<usize> = (0..run.accuracies.len())
                .filter(|&i| run.accuracies[i] == a)
                .collect();
            let wins: Vec<&WinnerRecord> = group_tasks
                .iter()
                .flat_map(|t| t.winners.iter())
                .filter(|w| w.accuracy == a)
                .collect();
            let mean_of = |f: fn(&WinnerRecord) -> f64| {
                (!wins.is_empty())
                    .then(|| wins.iter().map(|w| f(w)).sum::<f64>() / wins.len() as f64)
            };
            let rep_sum: f64 = group_tasks
                .iter()
                .flat_map(|t| members.iter().map(|&i| t.accumulated_after[i]))
                .sum();
            let rep_count = group_tasks.len() * members.len();
            GroupSummary {
                accuracy: a,
                workers: members.len(),
                wins: wins.len(),
                mean_contribution: mean_of(|w| w.contribution),
                mean_reputation: if rep_count == 0 {
                    0.0
                } else {
                    rep_sum / rep_count as f64
                },
                mean_payment: mean_of(|w| w.payment),
            }
        })
        .collect();

    let total_winners: usize = scored.iter().map(|t| t.winners.len()).sum();
    let top_winners = scored
        .iter()
        .flat_map(|t| t.winners.iter())
        .filter(|w| w.accuracy == top)
        .count();
    MultiTaskSummary {
        mechanism: run.mechanism,
        groups,
        scored_tasks: scored.len(),
        top_accuracy_proportion: if total_winners == 0 {
            0.0
        } else {
            top_winners as f64 / total_winners as f64
        },
        mean_final_loss: if scored.is_empty() {
            0.0
        } else {
            scored.iter().map(|t| t.final_validation_loss).sum::<f64>() / scored.len() as f64
        },
    }
}

pub fn push_run_rows(
    table: &mut ResultTable,
    cfg: &ExperimentConfig,
    run: &MultiTaskRun,
    summary: &MultiTaskSummary,
) -> Result<()> {
    let id = cfg.id();
    let m = run.mechanism.name();
    let seed = cfg.seed;
    for g in &summary.groups {
        let x = g.accuracy;
        if let Some(c) = g.mean_contribution {
            table.push(&id, m, "data_accuracy", x, "contribution", c, seed)?;
        }
        table.push(
            &id,
            m,
            "data_accuracy",
            x,
            "reputation",
            g.mean_reputation,
            seed,
        )?;
        if let Some(p) = g.mean_payment {
            table.push(&id, m, "data_accuracy", x, "payment", p, seed)?;
        }
        table.push(&id, m, "data_accuracy", x, "wins", g.wins as f64, seed)?;
    }
    let scored = summary.scored_tasks as f64;
    table.push(
        &id,
        m,
        "scored_tasks",
        scored,
        "top_accuracy_proportion",
        summary.top_accuracy_proportion,
        seed,
    )?;
    table.push(
        &id,
        m,
        "scored_tasks",
        scored,
        "final_loss",
        summary.mean_final_loss,
        seed,
    )?;
    for t in &run.tasks {
        let x = t.task_id as f64;
        table.push(
            &id,
            m,
            "task",
            x,
            "task_final_loss",
            t.final_validation_loss,
            seed,
        )?;
        table.push(
            &id,
            m,
            "task",
            x,
            "task_winners",
            t.winners.len() as f64,
            seed,
        )?;
    }
    Ok(())
}

/// Runs every configured mechanism from a fresh ledger on the same world.
pub fn run_multitask_detailed(
    cfg: &ExperimentConfig,
) -> Result<Vec<(MultiTaskRun, MultiTaskSummary)>> {
    cfg.validate()?;
    let world = build_world(cfg)?;
    let initial = cfg.reputation.re_init;
    cfg.mechanisms
        .par_iter()
        .map(|&m| {
            let mut ledger =
                ReputationLedger::with_workers((0..world.bids.len() as u32).map(WorkerId), initial);
            let run = run_tasks(cfg, &world, m, &mut ledger, 0)?;
            let summary = summarize(&run, cfg.discard, &cfg.group_window);
            Ok((run, summary))
        })
        .collect()
}

pub fn run_multitask(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new();
    for (run, summary) in run_multitask_detailed(cfg)? {
        push_run_rows(&mut table, cfg, &run, &summary)?;
    }
    Ok(table)
}
