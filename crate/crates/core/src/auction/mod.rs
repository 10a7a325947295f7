//! Reputation-weighted proportional-share reverse auction with ex-post
//! payments.
//!
//! Workers are ranked by cost density `b_i / Re_i`. The winners are the
//! longest prefix in which each worker's density is at most
//! `B / (Re_i + sum of Re already admitted)`. All winners share one payment
//! density threshold `rho*`, the smaller of the first loser's density and
//! `B / sum(Re over winners)`, which caps each winner at `Re_i * rho*`. Once
//! the task has run, a winner is paid according to its realised internal
//! reputation `re_i`, never above the cap.

mod benchmarks;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar, WorkerId};

pub use benchmarks::{run_benchmark, Mechanism};

/// A sealed bid. `true_cost` is known to the simulation only; no mechanism
/// except the full-information benchmark reads it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid<T> {
    pub worker: WorkerId,
    pub price: T,
    pub true_cost: T,
}

impl<T: Scalar> Bid<T> {
    /// A bid at the worker's true cost.
    pub fn truthful(worker: WorkerId, cost: T) -> Self {
        Self {
            worker,
            price: cost,
            true_cost: cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionConfig<T> {
    pub budget: T,
}

impl<T: Scalar> AuctionConfig<T> {
    pub fn new(budget: T) -> Result<Self> {
        if !budget.is_finite() || budget <= T::zero() {
            return Err(Error::InvalidValue {
                what: "budget",
                value: budget.as_f64(),
            });
        }
        Ok(Self { budget })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome<T> {
    /// Bidders in the order the policy considered them.
    pub sorted_order: Vec<WorkerId>,
    /// Winners in selection order.
    pub winners: Vec<WorkerId>,
    /// Number of winners; the last winner sits at position `k` (1-based) of
    /// `sorted_order`.
    pub k: usize,
    /// Payment density threshold. `None` for policies that pay bids.
    pub rho_star: Option<T>,
    /// Per-bidder payment cap; zero for losers.
    pub upper_bounds: BTreeMap<WorkerId, T>,
    /// Per-bidder payment; zero for losers and, before settlement, for
    /// winners of the ex-post mechanism.
    pub payments: BTreeMap<WorkerId, T>,
    /// Payments are final.
    pub settled: bool,
    /// Set when winners' internal reputations summed to zero at settlement.
    pub degenerate_internal: bool,
}

impl<T: Scalar> AuctionOutcome<T> {
    pub fn is_winner(&self, worker: WorkerId) -> bool {
        self.winners.contains(&worker)
    }

    pub fn payment(&self, worker: WorkerId) -> T {
        self.payments.get(&worker).copied().unwrap_or_else(T::zero)
    }

    pub fn total_payment(&self) -> T {
        self.payments.values().copied().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport<T> {
    pub worker_utilities: BTreeMap<WorkerId, T>,
    /// Sum of accumulated reputation over winners.
    pub publisher_utility: T,
    /// Realised internal reputation bought per unit of payment.
    pub expost_unit_utility: T,
}

fn validate_market<T: Scalar>(bids: &[Bid<T>], reputations: &BTreeMap<WorkerId, T>) -> Result<()> {
    if bids.is_empty() {
        return Err(Error::EmptyMarket);
    }
    let mut seen = BTreeSet::new();
    for b in bids {
        if !seen.insert(b.worker) {
            return Err(Error::DuplicateWorker(b.worker));
        }
        if !b.price.is_finite() || b.price <= T::zero() {
            return Err(Error::InvalidValue {
                what: "bid price",
                value: b.price.as_f64(),
            });
        }
        let re = reputations
            .get(&b.worker)
            .ok_or(Error::MissingReputation(b.worker))?;
        if re.is_nan() || *re <= T::zero() || *re > T::one() {
            return Err(Error::InvalidValue {
                what: "accumulated reputation",
                value: re.as_f64(),
            });
        }
    }
    Ok(())
}

/// Indices of `bids` sorted by ascending cost density, ties by worker id.
pub(crate) fn density_order<T: Scalar>(
    bids: &[Bid<T>],
    reputations: &BTreeMap<WorkerId, T>,
) -> Vec<(usize, T)> {
    let mut order: Vec<(usize, T)> = bids
        .iter()
        .enumerate()
        .map(|(i, b)| (i, b.price / reputations[&b.worker]))
        .collect();
    order.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| bids[a.0].worker.cmp(&bids[b.0].worker))
    });
    order
}

/// Selects winners and computes the payment caps. Payments stay at zero until
/// [`expost_payments`] settles them.
pub fn select_winners<T: Scalar>(
    bids: &[Bid<T>],
    reputations: &BTreeMap<WorkerId, T>,
    config: &AuctionConfig<T>,
) -> Result<AuctionOutcome<T>> {
    validate_market(bids, reputations)?;
    let order = density_order(bids, reputations);
    let budget = config.budget;

    let mut admitted = T::zero();
    let mut k = 0;
    for &(idx, density) in &order {
        let re = reputations[&bids[idx].worker];
        if density <= budget / (re + admitted) {
            admitted = admitted + re;
            k += 1;
        } else {
            break;
        }
    }

    // With no winners `admitted` is zero, the share term is infinite and the
    // threshold falls back to the first bidder's density.
    let share = budget / admitted;
    let rho_star = match order.get(k) {
        Some(&(_, next_density)) => next_density.min(share),
        None => share,
    };

    let winners: Vec<WorkerId> = order[..k].iter().map(|&(i, _)| bids[i].worker).collect();
    let mut upper_bounds = BTreeMap::new();
    let mut payments = BTreeMap::new();
    for b in bids {
        upper_bounds.insert(b.worker, T::zero());
        payments.insert(b.worker, T::zero());
    }
    for w in &winners {
        upper_bounds.insert(*w, reputations[w] * rho_star);
    }
    Ok(AuctionOutcome {
        sorted_order: order.iter().map(|&(i, _)| bids[i].worker).collect(),
        winners,
        k,
        rho_star: Some(rho_star),
        upper_bounds,
        payments,
        settled: k == 0,
        degenerate_internal: false,
    })
}

/// Settles winners' payments from their realised internal reputations:
/// `min(cap, max(B re_i / sum(re), rho* re_i))`.
pub fn expost_payments<T: Scalar>(
    outcome: &AuctionOutcome<T>,
    internal_reps: &BTreeMap<WorkerId, T>,
    config: &AuctionConfig<T>,
) -> Result<AuctionOutcome<T>> {
    let rho_star = outcome
        .rho_star
        .ok_or_else(|| Error::Config("outcome has no payment density threshold".into()))?;
    let mut reps = Vec::with_capacity(outcome.winners.len());
    for w in &outcome.winners {
        let re = *internal_reps.get(w).ok_or(Error::MissingInternal(*w))?;
        if !(re >= T::zero() && re <= T::one()) {
            return Err(Error::InvalidValue {
                what: "internal reputation",
                value: re.as_f64(),
            });
        }
        reps.push(re);
    }
    let total: T = reps.iter().copied().sum();

    let mut out = outcome.clone();
    out.settled = true;
    out.degenerate_internal = !outcome.winners.is_empty() && total <= T::zero();
    for (w, &re) in outcome.winners.iter().zip(&reps) {
        let pay = if out.degenerate_internal {
            T::zero()
        } else {
            let tentative = (config.budget * re / total).max(rho_star * re);
            outcome.upper_bounds[w].min(tentative)
        };
        out.payments.insert(*w, pay);
    }
    Ok(out)
}

pub fn compute_utilities<T: Scalar>(
    outcome: &AuctionOutcome<T>,
    bids: &[Bid<T>],
    reputations: &BTreeMap<WorkerId, T>,
    internal_reps: &BTreeMap<WorkerId, T>,
) -> Result<UtilityReport<T>> {
    let mut worker_utilities: BTreeMap<WorkerId, T> =
        bids.iter().map(|b| (b.worker, T::zero())).collect();
    let mut publisher_utility = T::zero();
    let mut realised = T::zero();
    let mut paid = T::zero();
    for w in &outcome.winners {
        let bid = bids
            .iter()
            .find(|b| b.worker == *w)
            .ok_or(Error::MissingReputation(*w))?;
        let p = outcome.payment(*w);
        worker_utilities.insert(*w, p - bid.true_cost);
        publisher_utility =
            publisher_utility + *reputations.get(w).ok_or(Error::MissingReputation(*w))?;
        realised = realised + *internal_reps.get(w).ok_or(Error::MissingInternal(*w))?;
        paid = paid + p;
    }
    let expost_unit_utility = if paid > T::zero() {
        realised / paid
    } else {
        T::zero()
    };
    Ok(UtilityReport {
        worker_utilities,
        publisher_utility,
        expost_unit_utility,
    })
}
