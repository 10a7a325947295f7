//! Randomized checks of budget feasibility, individual rationality and
//! truthfulness of the ex-post mechanism, plus a scaling check of selection.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, PropertySuiteConfig};
use super::table::ResultTable;
use crate::auction::{expost_payments, select_winners, AuctionConfig, Bid};
use crate::{seed, Result, WorkerId};

const SUITE_BUDGET: u64 = 1;
const SUITE_IR: u64 = 2;
const SUITE_TRUTH: u64 = 3;
const SUITE_COMPLEXITY: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub bids: Vec<Bid<f64>>,
    pub accumulated: BTreeMap<WorkerId, f64>,
    pub internal: BTreeMap<WorkerId, f64>,
    pub budget: f64,
}

impl Instance {
    pub fn is_honest(&self, w: WorkerId) -> bool {
        self.internal[&w] >= self.accumulated[&w]
    }
}

/// Random market of `1..=max_workers` bidders with truthful bids.
pub fn random_instance(
    p: &PropertySuiteConfig,
    min_workers: usize,
    max_workers: usize,
    rng_seed: u64,
) -> Instance {
    let mut rng = seed::rng(rng_seed, &[]);
    let n = rng.random_range(min_workers..=max_workers);
    let budget = rng.random_range(p.budget_range.low..=p.budget_range.high);
    let mut bids = Vec::with_capacity(n);
    let mut accumulated = BTreeMap::new();
    let mut internal = BTreeMap::new();
    for i in 0..n {
        let w = WorkerId(i as u32);
        bids.push(Bid::truthful(
            w,
            rng.random_range(p.cost_range.low..=p.cost_range.high),
        ));
        accumulated.insert(w, rng.random_range(0.1..=1.0));
        internal.insert(w, rng.random_range(0.0..=1.0));
    }
    Instance {
        bids,
        accumulated,
        internal,
        budget,
    }
}

/// Payments of the ex-post mechanism for the given bids.
fn payments(inst: &Instance, bids: &[Bid<f64>]) -> Result<BTreeMap<WorkerId, f64>> {
    let cfg = AuctionConfig::new(inst.budget)?;
    let sel = select_winners(bids, &inst.accumulated, &cfg)?;
    let settled = expost_payments(&sel, &inst.internal, &cfg)?;
    Ok(bids
        .iter()
        .map(|b| {
            let paid = if sel.is_winner(b.worker) {
                settled.payment(b.worker)
            } else {
                0.0
            };
            (b.worker, paid)
        })
        .collect())
}

fn utility(inst: &Instance, pay: &BTreeMap<WorkerId, f64>, w: WorkerId, won: bool) -> f64 {
    if won {
        pay[&w] - inst.bids[w.0 as usize].true_cost
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuiteResult {
    pub trials: usize,
    pub violations: usize,
    /// Largest violation magnitude; zero when there are none.
    pub worst: f64,
}

impl SuiteResult {
    fn merge(mut self, o: SuiteResult) -> SuiteResult {
        self.trials += o.trials;
        self.violations += o.violations;
        self.worst = self.worst.max(o.worst);
        self
    }

    fn observe(&mut self, excess: f64, tol: f64) {
        self.trials += 1;
        if excess > tol {
            self.violations += 1;
            self.worst = self.worst.max(excess);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub budget: SuiteResult,
    pub individual_rationality: SuiteResult,
    /// Deviations by honest workers.
    pub truthfulness: SuiteResult,
    /// Deviations by workers whose realised reputation fell short of their
    /// accumulated reputation. The guarantee does not cover them; reported
    /// for information.
    pub dishonest_gains: SuiteResult,
    pub complexity_ratio: Option<f64>,
    pub complexity_violation: bool,
}

impl PropertyReport {
    pub fn total_violations(&self) -> usize {
        self.budget.violations
            + self.individual_rationality.violations
            + self.truthfulness.violations
            + usize::from(self.complexity_violation)
    }
}

fn budget_suite(p: &PropertySuiteConfig, base: u64) -> Result<SuiteResult> {
    let parts: Vec<SuiteResult> = (0..p.budget_instances as u64)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(p, 1, p.max_workers, seed::derive(base, &[SUITE_BUDGET, i]));
            let pay = payments(&inst, &inst.bids)?;
            let mut r = SuiteResult::default();
            r.observe(pay.values().sum::<f64>() - inst.budget, p.tolerance);
            Ok(r)
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(SuiteResult::default(), SuiteResult::merge))
}

/// One trial per honest winner: its utility must be non-negative.
fn ir_suite(p: &PropertySuiteConfig, base: u64) -> Result<SuiteResult> {
    let parts: Vec<SuiteResult> = (0..p.ir_instances as u64)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(p, 1, p.max_workers, seed::derive(base, &[SUITE_IR, i]));
            let cfg = AuctionConfig::new(inst.budget)?;
            let sel = select_winners(&inst.bids, &inst.accumulated, &cfg)?;
            let pay = payments(&inst, &inst.bids)?;
            let mut r = SuiteResult::default();
            for w in sel.winners.iter().filter(|w| inst.is_honest(**w)) {
                r.observe(-utility(&inst, &pay, *w, true), p.tolerance);
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(SuiteResult::default(), SuiteResult::merge))
}

/// Every worker of every instance tries every deviation factor on its bid.
fn truthfulness_suite(p: &PropertySuiteConfig, base: u64) -> Result<(SuiteResult, SuiteResult)> {
    let parts: Vec<(SuiteResult, SuiteResult)> = (0..p.truthfulness_instances as u64)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(
                p,
                2,
                p.max_workers_truthfulness,
                seed::derive(base, &[SUITE_TRUTH, i]),
            );
            let cfg = AuctionConfig::new(inst.budget)?;
            let truthful_sel = select_winners(&inst.bids, &inst.accumulated, &cfg)?;
            let truthful_pay = payments(&inst, &inst.bids)?;
            let mut honest = SuiteResult::default();
            let mut dishonest = SuiteResult::default();
            for b in &inst.bids {
                let w = b.worker;
                let u0 = utility(&inst, &truthful_pay, w, truthful_sel.is_winner(w));
                for &d in &p.deviations {
                    let mut bids = inst.bids.clone();
                    bids[w.0 as usize].price = b.true_cost * d;
                    let sel = select_winners(&bids, &inst.accumulated, &cfg)?;
                    let pay = payments(&inst, &bids)?;
                    let gain = utility(&inst, &pay, w, sel.is_winner(w)) - u0;
                    if inst.is_honest(w) {
                        honest.observe(gain, p.tolerance);
                    } else {
                        dishonest.observe(gain, p.tolerance);
                    }
                }
            }
            Ok((honest, dishonest))
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(
        (SuiteResult::default(), SuiteResult::default()),
        |(a, b), (c, d)| (a.merge(c), b.merge(d)),
    ))
}

/// Best-of-five wall time of selection at each size; returns the ratio of
/// the larger to the smaller.
pub fn selection_time_ratio(p: &PropertySuiteConfig, base: u64) -> Result<f64> {
    let mut best = [f64::INFINITY; 2];
    for (k, &n) in p.complexity_sizes.iter().enumerate() {
        let mut rng = seed::rng(base, &[SUITE_COMPLEXITY, n as u64]);
        let bids: Vec<Bid<f64>> = (0..n)
            .map(|i| Bid::truthful(WorkerId(i as u32), rng.random_range(1.0..10.0)))
            .collect();
        let reps: BTreeMap<WorkerId, f64> = bids
            .iter()
            .map(|b| (b.worker, rng.random_range(0.1..=1.0)))
            .collect();
        let cfg = AuctionConfig::new(n as f64)?;
        for _ in 0..5 {
            let start = Instant::now();
            std::hint::black_box(select_winners(&bids, &reps, &cfg)?);
            best[k] = best[k].min(start.elapsed().as_secs_f64());
        }
    }
    Ok(best[1] / best[0].max(1e-9))
}

pub fn property_report(cfg: &ExperimentConfig) -> Result<PropertyReport> {
    let p = &cfg.properties;
    let (truthfulness, dishonest_gains) = truthfulness_suite(p, cfg.seed)?;
    let mut report = PropertyReport {
        budget: budget_suite(p, cfg.seed)?,
        individual_rationality: ir_suite(p, cfg.seed)?,
        truthfulness,
        dishonest_gains,
        ..Default::default()
    };
    if p.measure_complexity {
        let ratio = selection_time_ratio(p, cfg.seed)?;
        report.complexity_ratio = Some(ratio);
        report.complexity_violation = ratio >= p.complexity_ratio_limit;
    }
    Ok(report)
}

/// Rows carry counts and worst magnitudes only; the measured time ratio is
/// left out so the table stays reproducible.
pub fn report_rows(cfg: &ExperimentConfig, report: &PropertyReport) -> Result<ResultTable> {
    let id = cfg.id();
    let mut t = ResultTable::new();
    for (name, r) in [
        ("budget_feasibility", report.budget),
        ("individual_rationality", report.individual_rationality),
        ("truthfulness", report.truthfulness),
        ("dishonest_gain", report.dishonest_gains),
    ] {
        let x = r.trials as f64;
        t.push(
            &id,
            "ours",
            "trials",
            x,
            &format!("{name}_violations"),
            r.violations as f64,
            cfg.seed,
        )?;
        t.push(
            &id,
            "ours",
            "trials",
            x,
            &format!("{name}_worst"),
            r.worst,
            cfg.seed,
        )?;
    }
    if cfg.properties.measure_complexity {
        let sizes = cfg.properties.complexity_sizes;
        t.push(
            &id,
            "ours",
            "workers",
            sizes[1] as f64,
            "complexity_violations",
            f64::from(u8::from(report.complexity_violation)),
            cfg.seed,
        )?;
    }
    Ok(t)
}

pub fn run_property_suite(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    report_rows(cfg, &property_report(cfg)?)
}
