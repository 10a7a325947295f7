//! Selection policies the mechanism is compared against.
//!
//! The greedy policies walk bidders in their own order and pay each winner its
//! bid, stopping at the first bidder whose bid would push the total past the
//! budget. Proportional share keeps the mechanism's selection but pays the
//! caps up front. The approximate optimum knows true costs: it maximises
//! total accumulated reputation within the budget exactly for small markets
//! and greedily by reputation per unit cost otherwise.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{select_winners, validate_market, AuctionConfig, AuctionOutcome, Bid};
use crate::{seed, Error, Result, Scalar, WorkerId};

/// Markets at most this large are solved exactly by the full-information
/// benchmark.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Proportional-share selection with ex-post payments.
    Ours,
    /// Predecessor mechanism; modelled as proportional share with caps paid
    /// up front.
    Rrafl,
    VanillaFl,
    ProportionalShare,
    BidGreedy,
    ReputationGreedy,
    ApproxOptimal,
}

impl Mechanism {
    pub const ALL: [Mechanism; 7] = [
        Mechanism::Ours,
        Mechanism::Rrafl,
        Mechanism::VanillaFl,
        Mechanism::ProportionalShare,
        Mechanism::BidGreedy,
        Mechanism::ReputationGreedy,
        Mechanism::ApproxOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Ours => "ours",
            Mechanism::Rrafl => "rrafl",
            Mechanism::VanillaFl => "vanilla_fl",
            Mechanism::ProportionalShare => "proportional_share",
            Mechanism::BidGreedy => "bid_greedy",
            Mechanism::ReputationGreedy => "reputation_greedy",
            Mechanism::ApproxOptimal => "approx_optimal",
        }
    }

    /// Whether payments depend on realised performance.
    pub fn pays_ex_post(self) -> bool {
        self == Mechanism::Ours
    }

    /// Runs the selection stage. For [`Mechanism::Ours`] payments are left
    /// unsettled; every other policy returns final payments.
    pub fn select<T: Scalar>(
        self,
        bids: &[Bid<T>],
        reputations: &BTreeMap<WorkerId, T>,
        config: &AuctionConfig<T>,
        rng_seed: u64,
    ) -> Result<AuctionOutcome<T>> {
        run_benchmark(self, bids, reputations, config, rng_seed)
    }

    /// Completes payments once internal reputations are known. A no-op for
    /// policies that pay up front.
    pub fn settle<T: Scalar>(
        self,
        outcome: &AuctionOutcome<T>,
        internal_reps: &BTreeMap<WorkerId, T>,
        config: &AuctionConfig<T>,
    ) -> Result<AuctionOutcome<T>> {
        if self.pays_ex_post() {
            super::expost_payments(outcome, internal_reps, config)
        } else {
            Ok(outcome.clone())
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mechanism `{s}`")))
    }
}

pub fn run_benchmark<T: Scalar>(
    mechanism: Mechanism,
    bids: &[Bid<T>],
    reputations: &BTreeMap<WorkerId, T>,
    config: &AuctionConfig<T>,
    rng_seed: u64,
) -> Result<AuctionOutcome<T>> {
    match mechanism {
        Mechanism::Ours => select_winners(bids, reputations, config),
        Mechanism::ProportionalShare | Mechanism::Rrafl => {
            let mut o = select_winners(bids, reputations, config)?;
            o.payments = o.upper_bounds.clone();
            o.settled = true;
            Ok(o)
        }
        Mechanism::VanillaFl => {
            validate_market(bids, reputations)?;
            let mut order: Vec<usize> = (0..bids.len()).collect();
            // Shuffle from a canonical (id-sorted) order so the draw does not
            // depend on how the caller listed the bids.
            order.sort_by_key(|&i| bids[i].worker);
            order.shuffle(&mut seed::rng(rng_seed, &[0x5641_4e49]));
            Ok(pay_bids_in_order(bids, &order, config, |b| b.price))
        }
        Mechanism::BidGreedy => {
            validate_market(bids, reputations)?;
            let order = sorted_indices(bids, |b| b.price);
            Ok(pay_bids_in_order(bids, &order, config, |b| b.price))
        }
        Mechanism::ReputationGreedy => {
            validate_market(bids, reputations)?;
            let order = sorted_indices(bids, |b| -reputations[&b.worker]);
            Ok(pay_bids_in_order(bids, &order, config, |b| b.price))
        }
        Mechanism::ApproxOptimal => {
            validate_market(bids, reputations)?;
            if bids.len() <= EXHAUSTIVE_LIMIT {
                Ok(exhaustive_optimum(bids, reputations, config))
            } else {
                let order = sorted_indices(bids, |b| -(reputations[&b.worker] / b.true_cost));
                Ok(pay_bids_in_order(bids, &order, config, |b| b.true_cost))
            }
        }
    }
}

/// Ascending by `key`, ties by worker id.
fn sorted_indices<T: Scalar>(bids: &[Bid<T>], key: impl Fn(&Bid<T>) -> T) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| {
        key(&bids[a])
            .partial_cmp(&key(&bids[b]))
            .unwrap_or(Ordering::Equal)
            .then_with(|| bids[a].worker.cmp(&bids[b].worker))
    });
    order
}

fn pay_bids_in_order<T: Scalar>(
    bids: &[Bid<T>],
    order: &[usize],
    config: &AuctionConfig<T>,
    price: impl Fn(&Bid<T>) -> T,
) -> AuctionOutcome<T> {
    let limit = config.budget + T::tolerance();
    let mut spent = T::zero();
    let mut winners = Vec::new();
    for &i in order {
        let p = price(&bids[i]);
        if spent + p <= limit {
            spent = spent + p;
            winners.push(i);
        } else {
            break;
        }
    }
    outcome_paying(bids, order, &winners, price)
}

fn outcome_paying<T: Scalar>(
    bids: &[Bid<T>],
    order: &[usize],
    winners: &[usize],
    price: impl Fn(&Bid<T>) -> T,
) -> AuctionOutcome<T> {
    let mut payments: BTreeMap<WorkerId, T> = bids.iter().map(|b| (b.worker, T::zero())).collect();
    for &i in winners {
        payments.insert(bids[i].worker, price(&bids[i]));
    }
    AuctionOutcome {
        sorted_order: order.iter().map(|&i| bids[i].worker).collect(),
        winners: winners.iter().map(|&i| bids[i].worker).collect(),
        k: winners.len(),
        rho_star: None,
        upper_bounds: payments.clone(),
        payments,
        settled: true,
        degenerate_internal: false,
    }
}

/// Maximises total accumulated reputation subject to total true cost within
/// budget, over every subset. Ties prefer the cheaper subset.
fn exhaustive_optimum<T: Scalar>(
    bids: &[Bid<T>],
    reputations: &BTreeMap<WorkerId, T>,
    config: &AuctionConfig<T>,
) -> AuctionOutcome<T> {
    let n = bids.len();
    let limit = config.budget + T::tolerance();
    let mut cost = vec![T::zero(); 1 << n];
    let mut value = vec![T::zero(); 1 << n];
    let mut best = 0usize;
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        cost[mask] = cost[rest] + bids[low].true_cost;
        value[mask] = value[rest] + reputations[&bids[low].worker];
        if cost[mask] <= limit
            && (value[mask] > value[best]
                || (value[mask] == value[best] && cost[mask] < cost[best]))
        {
            best = mask;
        }
    }
    let order = sorted_indices(bids, |b| -(reputations[&b.worker] / b.true_cost));
    let winners: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| best & (1 << i) != 0)
        .collect();
    outcome_paying(bids, &order, &winners, |b| b.true_cost)
}
