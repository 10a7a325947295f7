//! One federated task from selected winners to settled payments.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::data::{Population, SyntheticTaskSpec};
use super::detect::{
    aggregation_weights, quality_detect_from_logits, AggregationWeights, QualityReport,
};
use super::model::{local_train, mean_cross_entropy, softmax_in_place, LogisticModel};
use crate::auction::{AuctionConfig, AuctionOutcome, Mechanism};
use crate::contribution::{
    aggregate_task_contribution, compute_round_contribution, compute_sample_weights,
    PredictionMatrix, RoundContribution, SampleWeights, TaskContribution,
};
use crate::reputation::{
    gompertz_trust, internal_reputation, trust_input, DetectionCounts, ReputationLedger,
    ReputationParams,
};
use crate::{seed, Error, Result, Scalar, WorkerId};

const STREAM_TRAIN: u64 = 0x7452_4149;

/// How the task's payments are settled once internal reputations are known.
#[derive(Debug, Clone, Copy)]
pub struct Settlement<'a, T> {
    pub mechanism: Mechanism,
    pub outcome: &'a AuctionOutcome<T>,
    pub config: &'a AuctionConfig<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct TaskInput<'a, T> {
    pub task_id: u64,
    pub spec: &'a SyntheticTaskSpec,
    pub population: &'a Population<T>,
    pub winners: &'a [WorkerId],
    pub params: &'a ReputationParams<T>,
    pub settlement: Option<Settlement<'a, T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog<T> {
    pub round: usize,
    pub sample_weights_degenerate: bool,
    pub contribution: RoundContribution<T>,
    /// Same scoring with every validation sample weighted equally.
    pub equal_weight_contribution: RoundContribution<T>,
    pub quality: QualityReport<T>,
    pub weights: AggregationWeights<T>,
    /// Validation accuracy of each local model, in winner order.
    pub local_accuracy: Vec<f64>,
    /// Validation loss of the global model after aggregation.
    pub global_loss: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskLog<T> {
    pub task_id: u64,
    pub winners: Vec<WorkerId>,
    pub rounds: Vec<RoundLog<T>>,
    pub contribution: TaskContribution<T>,
    pub equal_weight_contribution: TaskContribution<T>,
    pub detection: BTreeMap<WorkerId, DetectionCounts>,
    pub trust: BTreeMap<WorkerId, T>,
    pub internal: BTreeMap<WorkerId, T>,
    pub accumulated_before: BTreeMap<WorkerId, T>,
    pub accumulated_after: BTreeMap<WorkerId, T>,
    pub payments: BTreeMap<WorkerId, T>,
    pub outcome: Option<AuctionOutcome<T>>,
    pub final_validation_loss: T,
    pub test_loss: T,
    pub test_accuracy: f64,
}

fn true_label_probabilities<T: Scalar>(logits: &[T], classes: usize, labels: &[usize]) -> Vec<T> {
    let mut row = vec![T::zero(); classes];
    logits
        .chunks(classes)
        .zip(labels)
        .map(|(z, &y)| {
            row.copy_from_slice(z);
            softmax_in_place(&mut row);
            row[y]
        })
        .collect()
}

fn accuracy_from_logits<T: Scalar>(logits: &[T], classes: usize, labels: &[usize]) -> f64 {
    let hits = logits
        .chunks(classes)
        .zip(labels)
        .filter(|(z, &y)| z.iter().all(|&v| v <= z[y]))
        .count();
    hits as f64 / labels.len().max(1) as f64
}

/// Trains, screens, scores and aggregates for `spec.rounds` rounds, then
/// updates the winners' reputations and settles payments.
pub fn run_task<T: Scalar>(
    input: &TaskInput<'_, T>,
    ledger: &mut ReputationLedger<T>,
) -> Result<TaskLog<T>> {
    let TaskInput {
        task_id,
        spec,
        population,
        winners,
        params,
        settlement,
    } = *input;
    if winners.is_empty() {
        return Err(Error::Config("a task needs at least one winner".into()));
    }
    let mut seen = BTreeSet::new();
    for w in winners {
        if w.0 as usize >= population.workers.len() {
            return Err(Error::Config(format!("winner {w} has no dataset")));
        }
        if !seen.insert(*w) {
            return Err(Error::DuplicateWorker(*w));
        }
    }
    let classes = population.classes;
    let validation = &population.validation;
    let mut global = LogisticModel::zeros(classes, spec.feature_dim);
    let mut rounds = Vec::with_capacity(spec.rounds);
    let mut detection: BTreeMap<WorkerId, DetectionCounts> = winners
        .iter()
        .map(|w| (*w, DetectionCounts::default()))
        .collect();

    for round in 0..spec.rounds {
        let locals: Vec<LogisticModel<T>> = winners
            .par_iter()
            .map(|w| {
                let s = seed::derive(
                    spec.seed,
                    &[STREAM_TRAIN, task_id, round as u64, w.0 as u64],
                );
                local_train(&global, &population.workers[w.0 as usize], spec, s)
            })
            .collect();
        let logits: Vec<Vec<T>> = locals.par_iter().map(|m| m.logits(validation)).collect();

        let quality = quality_detect_from_logits(
            winners,
            &logits,
            classes,
            &validation.labels,
            T::lit(spec.delta_threshold),
        )?;
        for (w, &p) in winners.iter().zip(&quality.passed) {
            detection.get_mut(w).expect("winner").record(p);
        }

        let probs: Vec<T> = logits
            .iter()
            .flat_map(|z| true_label_probabilities(z, classes, &validation.true_labels))
            .collect();
        let pm = PredictionMatrix::new(winners.to_vec(), validation.len(), probs)?;
        let sw = compute_sample_weights(&pm);
        let contribution = compute_round_contribution(&pm, &sw, round)?;
        let equal_weight_contribution =
            compute_round_contribution(&pm, &SampleWeights::uniform(validation.len()), round)?;

        let weights = aggregation_weights(&contribution, &quality, T::lit(spec.s0))?;
        let members = winners
            .iter()
            .zip(&locals)
            .filter_map(|(w, m)| weights.omega.get(w).map(|&o| (m, o)));
        if let Some(next) = LogisticModel::weighted_sum(members) {
            global = next;
        }
        let global_loss = global.loss(validation);
        let local_accuracy = logits
            .iter()
            .map(|z| accuracy_from_logits(z, classes, &validation.labels))
            .collect();

        rounds.push(RoundLog {
            round,
            sample_weights_degenerate: sw.degenerate,
            contribution,
            equal_weight_contribution,
            quality,
            weights,
            local_accuracy,
            global_loss,
        });
    }

    // Every winner submits in every round.
    let all_rounds: BTreeSet<usize> = (0..spec.rounds).collect();
    let participation: BTreeMap<WorkerId, BTreeSet<usize>> =
        winners.iter().map(|w| (*w, all_rounds.clone())).collect();
    let ours: Vec<_> = rounds.iter().map(|r| r.contribution.clone()).collect();
    let equal: Vec<_> = rounds
        .iter()
        .map(|r| r.equal_weight_contribution.clone())
        .collect();
    let contribution = aggregate_task_contribution(&ours, &participation)?;
    let equal_weight_contribution = aggregate_task_contribution(&equal, &participation)?;

    let mut trust = BTreeMap::new();
    let mut internal = BTreeMap::new();
    let mut accumulated_before = BTreeMap::new();
    let mut accumulated_after = BTreeMap::new();
    for w in winners {
        let x = trust_input(detection[w], params)?;
        let t = gompertz_trust(x, params);
        let re = internal_reputation(contribution.per_worker[w], t);
        trust.insert(*w, t);
        internal.insert(*w, re);
        accumulated_before.insert(*w, ledger.accumulated(*w, params));
        ledger.update(*w, task_id, re, params);
        accumulated_after.insert(*w, ledger.accumulated(*w, params));
    }

    let outcome = match settlement {
        Some(s) => Some(s.mechanism.settle(s.outcome, &internal, s.config)?),
        None => None,
    };
    let payments = match &outcome {
        Some(o) => winners.iter().map(|w| (*w, o.payment(*w))).collect(),
        None => BTreeMap::new(),
    };

    let test_logits = global.logits(&population.test);
    Ok(TaskLog {
        task_id,
        winners: winners.to_vec(),
        rounds,
        contribution,
        equal_weight_contribution,
        detection,
        trust,
        internal,
        accumulated_before,
        accumulated_after,
        payments,
        outcome,
        final_validation_loss: global.loss(validation),
        test_loss: mean_cross_entropy(&test_logits, classes, &population.test.labels),
        test_accuracy: accuracy_from_logits(&test_logits, classes, &population.test.labels),
    })
}
