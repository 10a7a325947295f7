//! Single-task auction sweeps over budget or market size.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, MarketGenerator};
use super::table::ResultTable;
use crate::auction::{compute_utilities, AuctionConfig, Bid, Mechanism};
use crate::{seed, Error, Result, WorkerId};

const STREAM_MARKET: u64 = 0x4d4b_5431;
const STREAM_TIEBREAK: u64 = 0x5449_4542;

/// One synthetic auction market with truthful bids.
#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    pub bids: Vec<Bid<f64>>,
    pub accumulated: BTreeMap<WorkerId, f64>,
    pub internal: BTreeMap<WorkerId, f64>,
}

fn uniform<R: Rng>(rng: &mut R, low: f64, high: f64) -> f64 {
    if low >= high {
        low
    } else {
        rng.random_range(low..high)
    }
}

pub fn generate_market(gen: &MarketGenerator, workers: usize, rng_seed: u64) -> Market {
    let mut rng = seed::rng(rng_seed, &[STREAM_MARKET]);
    let mut bids = Vec::with_capacity(workers);
    let mut accumulated = BTreeMap::new();
    let mut internal = BTreeMap::new();
    for i in 0..workers {
        let w = WorkerId(i as u32);
        let re = uniform(&mut rng, gen.reputation.low, gen.reputation.high);
        let price = gen.bid_slope * re + uniform(&mut rng, gen.bid_offset.low, gen.bid_offset.high);
        let lo = (re - gen.internal_spread).max(0.0);
        let hi = (re + gen.internal_spread).min(1.0);
        bids.push(Bid::truthful(w, price));
        accumulated.insert(w, re);
        internal.insert(w, uniform(&mut rng, lo, hi));
    }
    Market {
        bids,
        accumulated,
        internal,
    }
}

/// Metrics of one mechanism on one market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketResult {
    pub unit_utility: f64,
    pub publisher_utility: f64,
    pub total_payment: f64,
    pub winners: usize,
}

pub fn run_market(
    mechanism: Mechanism,
    market: &Market,
    config: &AuctionConfig<f64>,
    rng_seed: u64,
) -> Result<MarketResult> {
    let selected = mechanism.select(&market.bids, &market.accumulated, config, rng_seed)?;
    let outcome = mechanism.settle(&selected, &market.internal, config)?;
    let total_payment = outcome.total_payment();
    if total_payment > config.budget * (1.0 + 1e-9) {
        return Err(Error::InvalidValue {
            what: "total payment over budget",
            value: total_payment,
        });
    }
    let report = compute_utilities(
        &outcome,
        &market.bids,
        &market.accumulated,
        &market.internal,
    )?;
    Ok(MarketResult {
        unit_utility: report.expost_unit_utility,
        publisher_utility: report.publisher_utility,
        total_payment,
        winners: outcome.winners.len(),
    })
}

/// Mean unit utility of every mechanism at one grid point. Markets are
/// shared across mechanisms within a repetition.
fn grid_point(cfg: &ExperimentConfig, workers: usize, budget: f64, point: u64) -> Result<Vec<f64>> {
    let config = AuctionConfig::new(budget)?;
    let per_rep: Vec<Vec<f64>> = (0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|rep| {
            let s = seed::derive(cfg.seed, &[point, rep]);
            let market = generate_market(&cfg.market, workers, s);
            cfg.mechanisms
                .iter()
                .map(|m| {
                    run_market(*m, &market, &config, seed::derive(s, &[STREAM_TIEBREAK]))
                        .map(|r| r.unit_utility)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let n = per_rep.len() as f64;
    Ok((0..cfg.mechanisms.len())
        .map(|j| per_rep.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect())
}

/// Emits one `unit_utility` row per grid point and mechanism, averaged over
/// `cfg.repetitions` markets.
pub fn run_auction_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let id = cfg.id();
    let (x_name, points): (&str, Vec<(f64, usize, f64)>) = match cfg.kind {
        ExperimentKind::AuctionSweepBudget => (
            "budget",
            cfg.budgets.iter().map(|&b| (b, cfg.workers, b)).collect(),
        ),
        ExperimentKind::AuctionSweepWorkers => {
            let b = cfg.effective_budget();
            (
                "workers",
                cfg.worker_counts
                    .iter()
                    .map(|&n| (n as f64, n, b))
                    .collect(),
            )
        }
        other => {
            return Err(Error::Config(format!(
                "{} is not an auction sweep",
                other.name()
            )))
        }
    };
    let mut table = ResultTable::new();
    for (p, &(x, workers, budget)) in points.iter().enumerate() {
        let means = grid_point(cfg, workers, budget, p as u64)?;
        for (m, v) in cfg.mechanisms.iter().zip(means) {
            table.push(&id, m.name(), x_name, x, "unit_utility", v, cfg.seed)?;
        }
    }
    Ok(table)
}

/// Detailed result of every configured mechanism on a single market: totals
/// plus one payment row per winner.
pub fn run_single_auction(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let budget = cfg.effective_budget();
    let config = AuctionConfig::new(budget)?;
    let market = generate_market(&cfg.market, cfg.workers, cfg.seed);
    let id = cfg.id();
    let mut table = ResultTable::new();
    for m in &cfg.mechanisms {
        let s = seed::derive(cfg.seed, &[STREAM_TIEBREAK]);
        let selected = m.select(&market.bids, &market.accumulated, &config, s)?;
        let outcome = m.settle(&selected, &market.internal, &config)?;
        let r = run_market(*m, &market, &config, s)?;
        let name = m.name();
        table.push(
            &id,
            name,
            "budget",
            budget,
            "winners",
            r.winners as f64,
            cfg.seed,
        )?;
        table.push(
            &id,
            name,
            "budget",
            budget,
            "total_payment",
            r.total_payment,
            cfg.seed,
        )?;
        table.push(
            &id,
            name,
            "budget",
            budget,
            "publisher_utility",
            r.publisher_utility,
            cfg.seed,
        )?;
        table.push(
            &id,
            name,
            "budget",
            budget,
            "unit_utility",
            r.unit_utility,
            cfg.seed,
        )?;
        for w in &outcome.winners {
            table.push(
                &id,
                name,
                "worker",
                w.0 as f64,
                "payment",
                outcome.payment(*w),
                cfg.seed,
            )?;
        }
    }
    Ok(table)
}
