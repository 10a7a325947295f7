//! Difficulty-weighted contribution measurement.
//!
//! Each validation sample is weighted by the total negative log-likelihood the
//! participating workers assign to its true label, so samples that most
//! workers get wrong count for more. A worker's round contribution is its
//! probability of the true label averaged under those weights, rescaled so the
//! best worker of the round scores 1. The task contribution is the mean over
//! the rounds the worker took part in.
//!
//! Only workers that submitted a model in a round appear in that round's
//! matrix. Workers that later fail quality detection are still rows here.

use std::collections::{BTreeMap, BTreeSet};

use crate::{Error, Result, Scalar, WorkerId};

/// Probabilities are clamped to `[PROB_FLOOR, 1]` before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Below this total negative log-likelihood the weights fall back to uniform.
pub const DENOMINATOR_FLOOR: f64 = 1e-15;

/// Per-round probabilities of the true label, workers x validation samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix<T> {
    workers: Vec<WorkerId>,
    samples: usize,
    probs: Vec<T>,
}

impl<T: Scalar> PredictionMatrix<T> {
    /// Builds a matrix from row-major probabilities, clamping every entry into
    /// `[PROB_FLOOR, 1]`. NaN entries are rejected.
    pub fn new(workers: Vec<WorkerId>, samples: usize, probs: Vec<T>) -> Result<Self> {
        if workers.is_empty() || samples == 0 {
            return Err(Error::EmptyMatrix {
                rows: workers.len(),
                cols: samples,
            });
        }
        if probs.len() != workers.len() * samples {
            return Err(Error::Dimension {
                what: "prediction matrix entries",
                expected: workers.len() * samples,
                got: probs.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for w in &workers {
            if !seen.insert(*w) {
                return Err(Error::DuplicateWorker(*w));
            }
        }
        let floor = T::lit(PROB_FLOOR);
        let mut clamped = probs;
        for p in clamped.iter_mut() {
            if p.is_nan() {
                return Err(Error::InvalidValue {
                    what: "probability",
                    value: f64::NAN,
                });
            }
            *p = p.max(floor).min(T::one());
        }
        Ok(Self {
            workers,
            samples,
            probs: clamped,
        })
    }

    pub fn from_rows(workers: Vec<WorkerId>, rows: &[Vec<T>]) -> Result<Self> {
        let samples = rows.first().map_or(0, Vec::len);
        if rows.len() != workers.len() {
            return Err(Error::Dimension {
                what: "prediction matrix rows",
                expected: workers.len(),
                got: rows.len(),
            });
        }
        let mut probs = Vec::with_capacity(rows.len() * samples);
        for r in rows {
            if r.len() != samples {
                return Err(Error::Dimension {
                    what: "prediction matrix row length",
                    expected: samples,
                    got: r.len(),
                });
            }
            probs.extend_from_slice(r);
        }
        Self::new(workers, samples, probs)
    }

    pub fn workers(&self) -> &[WorkerId] {
        &self.workers
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn num_samples(&self) -> usize {
        self.samples
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.probs[i * self.samples..(i + 1) * self.samples]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.probs[i * self.samples + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights<T> {
    pub weights: Vec<T>,
    /// Set when every prediction was perfect and uniform weights were used.
    pub degenerate: bool,
}

impl<T: Scalar> SampleWeights<T> {
    /// Equal weights, i.e. plain accuracy-style scoring.
    pub fn uniform(samples: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(samples.max(1));
        Self {
            weights: vec![w; samples],
            degenerate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weights each sample by its share of the total negative log-likelihood.
pub fn compute_sample_weights<T: Scalar>(pm: &PredictionMatrix<T>) -> SampleWeights<T> {
    let cols = pm.num_samples();
    let mut column_nll = vec![T::zero(); cols];
    for i in 0..pm.num_workers() {
        for (acc, &p) in column_nll.iter_mut().zip(pm.row(i)) {
            *acc = *acc - p.ln();
        }
    }
    let total: T = column_nll.iter().copied().sum();
    if total.is_nan() || total < T::lit(DENOMINATOR_FLOOR) {
        return SampleWeights {
            degenerate: true,
            ..SampleWeights::uniform(cols)
        };
    }
    SampleWeights {
        weights: column_nll.into_iter().map(|v| v / total).collect(),
        degenerate: false,
    }
}

/// One round's raw and max-normalised contributions, in matrix row order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundContribution<T> {
    pub round: usize,
    pub workers: Vec<WorkerId>,
    pub raw: Vec<T>,
    pub standardized: Vec<T>,
}

impl<T: Scalar> RoundContribution<T> {
    pub fn standardized_of(&self, worker: WorkerId) -> Option<T> {
        self.workers
            .iter()
            .position(|w| *w == worker)
            .map(|i| self.standardized[i])
    }

    pub fn raw_of(&self, worker: WorkerId) -> Option<T> {
        self.workers
            .iter()
            .position(|w| *w == worker)
            .map(|i| self.raw[i])
    }
}

pub fn compute_round_contribution<T: Scalar>(
    pm: &PredictionMatrix<T>,
    w: &SampleWeights<T>,
    round: usize,
) -> Result<RoundContribution<T>> {
    if w.len() != pm.num_samples() {
        return Err(Error::Dimension {
            what: "sample weights",
            expected: pm.num_samples(),
            got: w.len(),
        });
    }
    let raw: Vec<T> = (0..pm.num_workers())
        .map(|i| {
            pm.row(i)
                .iter()
                .zip(&w.weights)
                .map(|(&p, &wj)| p * wj)
                .sum()
        })
        .collect();
    // raw > 0 always: every entry is at least PROB_FLOOR and the weights sum to 1.
    let max = raw.iter().copied().fold(T::zero(), T::max);
    let standardized = raw.iter().map(|&r| r / max).collect();
    Ok(RoundContribution {
        round,
        workers: pm.workers().to_vec(),
        raw,
        standardized,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskContribution<T> {
    pub per_worker: BTreeMap<WorkerId, T>,
    pub rounds_participated: BTreeMap<WorkerId, BTreeSet<usize>>,
    /// Workers listed with no participated rounds; they score 0.
    pub empty_participation: BTreeSet<WorkerId>,
}

/// Averages each worker's standardized contribution over the rounds it took
/// part in.
pub fn aggregate_task_contribution<T: Scalar>(
    rounds: &[RoundContribution<T>],
    participation: &BTreeMap<WorkerId, BTreeSet<usize>>,
) -> Result<TaskContribution<T>> {
    let by_index: BTreeMap<usize, &RoundContribution<T>> =
        rounds.iter().map(|r| (r.round, r)).collect();
    let mut out = TaskContribution {
        rounds_participated: participation.clone(),
        ..Default::default()
    };
    for (&worker, set) in participation {
        if set.is_empty() {
            out.empty_participation.insert(worker);
            out.per_worker.insert(worker, T::zero());
            continue;
        }
        let mut sum = T::zero();
        for &t in set {
            let rc = by_index.get(&t).ok_or(Error::UnknownRound(t))?;
            sum = sum
                + rc.standardized_of(worker)
                    .ok_or(Error::MissingWorker { worker, round: t })?;
        }
        out.per_worker
            .insert(worker, sum / T::from_usize_lossy(set.len()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: u32) -> Vec<WorkerId> {
        (0..n).map(WorkerId).collect()
    }

    // -ln 0.5 / (-ln 0.5 - ln 0.9), evaluated independently in double precision.
    const W1: f64 = 0.868_053_224_587_716_5;

    #[test]
    fn weights_two_by_two() {
        let pm = PredictionMatrix::from_rows(ids(2), &[vec![0.5, 0.9], vec![0.5, 0.9]]).unwrap();
        let w = compute_sample_weights(&pm);
        assert!(!w.degenerate);
        assert!((w.weights[0] - W1).abs() < 1e-12);
        assert!((w.weights[1] - (1.0 - W1)).abs() < 1e-12);
    }

    #[test]
    fn constant_matrix_gives_uniform_weights() {
        let pm = PredictionMatrix::<f64>::new(ids(3), 4, vec![0.7; 12]).unwrap();
        let w = compute_sample_weights(&pm);
        for x in w.weights {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_predictions_fall_back_to_uniform() {
        let pm = PredictionMatrix::new(ids(2), 3, vec![1.0, 1.0, 1.0, 1.0, 1.2, 1.0]).unwrap();
        let w = compute_sample_weights(&pm);
        assert!(w.degenerate);
        assert_eq!(w.weights, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn entries_are_clamped() {
        let pm = PredictionMatrix::new(ids(1), 3, vec![0.0, -1.0, 2.0]).unwrap();
        assert_eq!(pm.row(0), &[PROB_FLOOR, PROB_FLOOR, 1.0]);
        assert!(PredictionMatrix::<f64>::new(ids(1), 1, vec![f64::NAN]).is_err());
        assert!(PredictionMatrix::<f64>::new(vec![], 1, vec![]).is_err());
        assert!(
            PredictionMatrix::<f64>::new(vec![WorkerId(1), WorkerId(1)], 1, vec![0.5, 0.5])
                .is_err()
        );
    }

    #[test]
    fn round_contribution_examples() {
        let pm = PredictionMatrix::from_rows(ids(2), &[vec![0.5, 0.9], vec![0.5, 0.9]]).unwrap();
        let w = compute_sample_weights(&pm);
        let rc = compute_round_contribution(&pm, &w, 0).unwrap();
        let expected_raw = 0.5 * W1 + 0.9 * (1.0 - W1);
        for r in &rc.raw {
            assert!((r - expected_raw).abs() < 1e-12);
        }
        assert_eq!(rc.standardized, vec![1.0, 1.0]);

        let pm = PredictionMatrix::from_rows(ids(2), &[vec![1.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let rc = compute_round_contribution(&pm, &SampleWeights::uniform(2), 3).unwrap();
        assert_eq!(rc.raw, vec![1.0, 0.5]);
        assert_eq!(rc.standardized, vec![1.0, 0.5]);
        assert_eq!(rc.round, 3);

        let pm = PredictionMatrix::from_rows(ids(1), &[vec![0.2, 0.3, 0.6]]).unwrap();
        let rc = compute_round_contribution(&pm, &compute_sample_weights(&pm), 0).unwrap();
        assert_eq!(rc.standardized, vec![1.0]);
    }

    #[test]
    fn weight_length_mismatch_is_an_error() {
        let pm = PredictionMatrix::new(ids(1), 3, vec![0.5; 3]).unwrap();
        assert!(compute_round_contribution(&pm, &SampleWeights::uniform(2), 0).is_err());
    }

    fn round(t: usize, s: &[f64]) -> RoundContribution<f64> {
        RoundContribution {
            round: t,
            workers: ids(s.len() as u32),
            raw: s.to_vec(),
            standardized: s.to_vec(),
        }
    }

    #[test]
    fn task_contribution_averages_over_participated_rounds() {
        let rounds = vec![
            round(0, &[1.0, 0.9]),
            round(1, &[0.5, 0.6]),
            round(2, &[1.0, 0.9]),
        ];
        let mut part = BTreeMap::new();
        part.insert(WorkerId(0), BTreeSet::from([0, 1]));
        part.insert(WorkerId(1), BTreeSet::from([0, 2]));
        let tc = aggregate_task_contribution(&rounds, &part).unwrap();
        assert!((tc.per_worker[&WorkerId(0)] - 0.75).abs() < 1e-12);
        assert!((tc.per_worker[&WorkerId(1)] - 0.9).abs() < 1e-12);
        assert!(tc.empty_participation.is_empty());
    }

    #[test]
    fn empty_participation_scores_zero_and_is_flagged() {
        let rounds = vec![round(0, &[1.0])];
        let mut part = BTreeMap::new();
        part.insert(WorkerId(0), BTreeSet::new());
        let tc = aggregate_task_contribution(&rounds, &part).unwrap();
        assert_eq!(tc.per_worker[&WorkerId(0)], 0.0);
        assert!(tc.empty_participation.contains(&WorkerId(0)));
    }

    #[test]
    fn unknown_round_is_an_error() {
        let rounds = vec![round(0, &[1.0])];
        let mut part = BTreeMap::new();
        part.insert(WorkerId(0), BTreeSet::from([4]));
        assert!(matches!(
            aggregate_task_contribution(&rounds, &part),
            Err(Error::UnknownRound(4))
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let pm =
            PredictionMatrix::<f32>::from_rows(ids(2), &[vec![0.5, 0.9], vec![0.5, 0.9]]).unwrap();
        let w = compute_sample_weights(&pm);
        assert!((w.weights[0] - W1 as f32).abs() < 1e-6);
    }
}
