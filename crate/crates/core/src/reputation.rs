//! Trustworthiness, internal reputation and accumulated reputation.
//!
//! A worker's trust in a task comes from a Gompertz curve over the balance of
//! passed and failed quality detections, with failures weighted more heavily.
//! The internal reputation is contribution times trust. The accumulated
//! reputation is a moving average whose step size `alpha` grows when the new
//! internal reputation is low (`h`) and when the worker is on a long streak of
//! good or bad tasks (`g`). Drops are therefore fast and recoveries slow.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar, WorkerId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReputationParams<T> {
    /// Weight on passes in the trust input; failures get `1 - theta`.
    pub theta: T,
    pub gompertz_a: T,
    pub gompertz_b: T,
    pub gompertz_c: T,
    /// Decay rate of the streak factor.
    pub beta1: T,
    /// Asymptote of the streak factor.
    pub beta2: T,
    /// Accumulated reputation assigned to never-seen workers.
    pub re_init: T,
}

impl<T: Scalar> Default for ReputationParams<T> {
    fn default() -> Self {
        Self {
            theta: T::lit(0.4),
            gompertz_a: T::one(),
            gompertz_b: -T::one(),
            gompertz_c: T::lit(-5.5),
            beta1: T::lit(0.5),
            beta2: T::lit(0.25),
            re_init: T::lit(0.5),
        }
    }
}

impl<T: Scalar> ReputationParams<T> {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &'static str, v: T| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    what,
                    value: v.as_f64(),
                })
            }
        };
        check(
            self.theta > T::zero() && self.theta < T::lit(0.5),
            "theta",
            self.theta,
        )?;
        check(self.beta1 > T::zero(), "beta1", self.beta1)?;
        check(
            self.beta2 > T::zero() && self.beta2 < T::one(),
            "beta2",
            self.beta2,
        )?;
        check(
            self.re_init >= T::zero() && self.re_init <= T::one(),
            "re_init",
            self.re_init,
        )?;
        check(self.gompertz_a.is_finite(), "gompertz_a", self.gompertz_a)?;
        check(self.gompertz_b.is_finite(), "gompertz_b", self.gompertz_b)?;
        check(self.gompertz_c.is_finite(), "gompertz_c", self.gompertz_c)
    }
}

/// Quality-detection passes and failures of one worker within one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub n_pass: u32,
    pub n_fail: u32,
}

impl DetectionCounts {
    pub fn record(&mut self, passed: bool) {
        if passed {
            self.n_pass += 1;
        } else {
            self.n_fail += 1;
        }
    }
}

/// Balance of passes and failures in `[-1, 1]`.
pub fn trust_input<T: Scalar>(counts: DetectionCounts, params: &ReputationParams<T>) -> Result<T> {
    if counts.n_pass == 0 && counts.n_fail == 0 {
        return Err(Error::ZeroDetections);
    }
    let pass = params.theta * T::from_u32(counts.n_pass).unwrap();
    let fail = (T::one() - params.theta) * T::from_u32(counts.n_fail).unwrap();
    Ok((pass - fail) / (pass + fail))
}

/// `a * exp(b * exp(c * x))`; with the defaults, `exp(-exp(-5.5 x))`.
pub fn gompertz_trust<T: Scalar>(x: T, params: &ReputationParams<T>) -> T {
    params.gompertz_a * (params.gompertz_b * (params.gompertz_c * x).exp()).exp()
}

pub fn internal_reputation<T: Scalar>(contrib: T, trust: T) -> T {
    contrib * trust
}

/// Influence of the new internal reputation on the update step:
/// `1 - 19/(10 pi) * atan(10 re / pi)`. Decreasing, with `h(re) * re`
/// increasing on `[0, 1]`.
pub fn h_factor<T: Scalar>(re: T) -> T {
    let pi = T::PI();
    T::one() - T::lit(19.0) / (T::lit(10.0) * pi) * (T::lit(10.0) * re / pi).atan()
}

/// Streak factor `2(1 - beta2) / (1 + exp(beta1 n)) + beta2`; `g(0) = 1`,
/// decreasing towards `beta2`.
pub fn g_factor<T: Scalar>(n: u32, params: &ReputationParams<T>) -> T {
    let two = T::lit(2.0);
    let e = (params.beta1 * T::from_u32(n).unwrap()).exp();
    two * (T::one() - params.beta2) / (T::one() + e) + params.beta2
}

/// Weight of the new internal reputation given the post-update streak counters.
pub fn attenuation<T: Scalar>(re: T, n_good: u32, n_bad: u32, params: &ReputationParams<T>) -> T {
    let h = h_factor(re);
    let f = g_factor(n_good, params) * g_factor(n_bad, params);
    h / (h + (T::one() - h) * f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry<T> {
    pub task: u64,
    pub internal: T,
    pub alpha: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationRecord<T> {
    pub accumulated: T,
    pub n_good: u32,
    pub n_bad: u32,
    pub history: Vec<HistoryEntry<T>>,
}

impl<T: Scalar> ReputationRecord<T> {
    pub fn new(initial: T) -> Self {
        Self {
            accumulated: initial,
            n_good: 0,
            n_bad: 0,
            history: Vec::new(),
        }
    }

    /// In-place form of [`update_accumulated`]. Returns the `alpha` used.
    pub fn apply(&mut self, task: u64, re_new: T, params: &ReputationParams<T>) -> T {
        // Streak counters move first; alpha sees the updated counts.
        if re_new >= self.accumulated {
            self.n_good += 1;
            self.n_bad = 0;
        } else {
            self.n_bad += 1;
            self.n_good = 0;
        }
        let alpha = attenuation(re_new, self.n_good, self.n_bad, params);
        self.accumulated = alpha * re_new + (T::one() - alpha) * self.accumulated;
        self.history.push(HistoryEntry {
            task,
            internal: re_new,
            alpha,
        });
        alpha
    }
}

/// Folds one task's internal reputation into the record.
pub fn update_accumulated<T: Scalar>(
    record: &ReputationRecord<T>,
    task: u64,
    re_new: T,
    params: &ReputationParams<T>,
) -> ReputationRecord<T> {
    let mut next = record.clone();
    next.apply(task, re_new, params);
    next
}

/// Accumulated reputation of every known worker.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReputationLedger<T> {
    pub records: BTreeMap<WorkerId, ReputationRecord<T>>,
}

impl<T: Scalar> ReputationLedger<T> {
    pub fn new() -> Self {
        Self {
            records: BTreeMap::new(),
        }
    }

    pub fn with_workers(workers: impl IntoIterator<Item = WorkerId>, initial: T) -> Self {
        Self {
            records: workers
                .into_iter()
                .map(|w| (w, ReputationRecord::new(initial)))
                .collect(),
        }
    }

    /// Accumulated reputation, or `re_init` for unknown workers.
    pub fn accumulated(&self, worker: WorkerId, params: &ReputationParams<T>) -> T {
        self.records
            .get(&worker)
            .map_or(params.re_init, |r| r.accumulated)
    }

    pub fn record_mut(
        &mut self,
        worker: WorkerId,
        params: &ReputationParams<T>,
    ) -> &mut ReputationRecord<T> {
        self.records
            .entry(worker)
            .or_insert_with(|| ReputationRecord::new(params.re_init))
    }

    pub fn update(
        &mut self,
        worker: WorkerId,
        task: u64,
        re_new: T,
        params: &ReputationParams<T>,
    ) -> T {
        self.record_mut(worker, params).apply(task, re_new, params)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
