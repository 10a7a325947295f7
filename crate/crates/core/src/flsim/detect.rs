//! Leave-one-out quality detection and performance-based aggregation weights.

use std::collections::BTreeMap;

use super::data::Dataset;
use super::model::{mean_cross_entropy, LogisticModel};
use crate::contribution::RoundContribution;
use crate::{Error, Result, Scalar, WorkerId};

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport<T> {
    pub workers: Vec<WorkerId>,
    /// `l_{-i} - l` per worker, in `workers` order.
    pub delta_loss: Vec<T>,
    pub passed: Vec<bool>,
    pub delta_threshold: T,
    /// Validation loss `l` of the aggregate of every submitted model.
    pub base_loss: T,
    /// Only one model was submitted; it passes without a leave-one-out test.
    pub single_worker: bool,
}

impl<T: Scalar> QualityReport<T> {
    pub fn passed_workers(&self) -> Vec<WorkerId> {
        self.workers
            .iter()
            .zip(&self.passed)
            .filter(|(_, &p)| p)
            .map(|(w, _)| *w)
            .collect()
    }

    pub fn delta_of(&self, worker: WorkerId) -> Option<T> {
        self.workers
            .iter()
            .position(|w| *w == worker)
            .map(|i| self.delta_loss[i])
    }

    pub fn did_pass(&self, worker: WorkerId) -> Option<bool> {
        self.workers
            .iter()
            .position(|w| *w == worker)
            .map(|i| self.passed[i])
    }
}

/// Compares the validation loss of the uniform aggregate of all submitted
/// models with the aggregate that leaves each worker out.
///
/// The model is linear in its parameters, so the logits of a parameter
/// average are the same average of the per-model logits; each worker's logits
/// are computed once and the leave-one-out aggregates are formed from them.
pub fn quality_detect<T: Scalar>(
    locals: &[(WorkerId, &LogisticModel<T>)],
    validation: &Dataset<T>,
    delta_threshold: T,
) -> Result<QualityReport<T>> {
    let logits: Vec<Vec<T>> = locals.iter().map(|(_, m)| m.logits(validation)).collect();
    quality_detect_from_logits(
        &locals.iter().map(|(w, _)| *w).collect::<Vec<_>>(),
        &logits,
        locals.first().map_or(0, |(_, m)| m.classes),
        &validation.labels,
        delta_threshold,
    )
}

pub(crate) fn quality_detect_from_logits<T: Scalar>(
    workers: &[WorkerId],
    logits: &[Vec<T>],
    classes: usize,
    labels: &[usize],
    delta_threshold: T,
) -> Result<QualityReport<T>> {
    let k = workers.len();
    if k == 0 {
        return Err(Error::Config(
            "quality detection needs at least one model".into(),
        ));
    }
    let len = logits[0].len();
    let mut total = vec![T::zero(); len];
    for z in logits {
        for (acc, &v) in total.iter_mut().zip(z) {
            *acc = *acc + v;
        }
    }
    let kf = T::from_usize_lossy(k);
    let mean: Vec<T> = total.iter().map(|&v| v / kf).collect();
    let base_loss = mean_cross_entropy(&mean, classes, labels);

    if k == 1 {
        return Ok(QualityReport {
            workers: workers.to_vec(),
            delta_loss: vec![T::zero()],
            passed: vec![true],
            delta_threshold,
            base_loss,
            single_worker: true,
        });
    }

    let rest = T::from_usize_lossy(k - 1);
    let mut scratch = vec![T::zero(); len];
    let mut delta_loss = Vec::with_capacity(k);
    for z in logits {
        for ((s, &t), &v) in scratch.iter_mut().zip(&total).zip(z) {
            *s = (t - v) / rest;
        }
        delta_loss.push(mean_cross_entropy(&scratch, classes, labels) - base_loss);
    }
    let passed = delta_loss.iter().map(|&d| d >= delta_threshold).collect();
    Ok(QualityReport {
        workers: workers.to_vec(),
        delta_loss,
        passed,
        delta_threshold,
        base_loss,
        single_worker: false,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregationWeights<T> {
    pub contrib_scores: BTreeMap<WorkerId, T>,
    pub quality_scores: BTreeMap<WorkerId, T>,
    pub omega: BTreeMap<WorkerId, T>,
    pub s0: T,
    /// All passed workers had the same `delta_loss`; `s_i` set uniform.
    pub degenerate_scores: bool,
    /// Every passed worker had zero contribution score; `omega` set uniform.
    pub all_zero_contrib: bool,
}

/// Aggregation weights over the workers that passed detection:
/// `omega_i` proportional to `max(0, contrib_i) * quality_score_i`.
pub fn aggregation_weights<T: Scalar>(
    contribs: &RoundContribution<T>,
    report: &QualityReport<T>,
    s0: T,
) -> Result<AggregationWeights<T>> {
    let passed = report.passed_workers();
    let mut out = AggregationWeights {
        s0,
        ..Default::default()
    };
    if passed.is_empty() {
        return Ok(out);
    }
    let n = T::from_usize_lossy(passed.len());
    let deltas: Vec<T> = passed
        .iter()
        .map(|w| report.delta_of(*w).expect("passed worker in report"))
        .collect();
    let min = deltas.iter().copied().fold(T::infinity(), T::min);
    let spread: T = deltas.iter().map(|&d| d - min).sum();
    let s: Vec<T> = if spread > T::zero() {
        deltas.iter().map(|&d| (d - min) / spread).collect()
    } else {
        out.degenerate_scores = true;
        vec![T::one() / n; passed.len()]
    };
    let q_total: T = s.iter().map(|&si| s0 + si).sum();

    let mut products = Vec::with_capacity(passed.len());
    for (w, &si) in passed.iter().zip(&s) {
        let c = contribs
            .standardized_of(*w)
            .ok_or(Error::MissingWorker {
                worker: *w,
                round: contribs.round,
            })?
            .max(T::zero());
        let q = (s0 + si) / q_total;
        out.contrib_scores.insert(*w, c);
        out.quality_scores.insert(*w, q);
        products.push(c * q);
    }
    let total: T = products.iter().copied().sum();
    if total > T::zero() {
        for (w, p) in passed.iter().zip(products) {
            out.omega.insert(*w, p / total);
        }
    } else {
        out.all_zero_contrib = true;
        for w in &passed {
            out.omega.insert(*w, T::one() / n);
        }
    }
    Ok(out)
}
