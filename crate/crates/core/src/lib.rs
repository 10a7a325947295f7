//! Reputation- and contribution-driven reverse auction for horizontal
//! federated learning.
//!
//! The crate is organised bottom-up:
//!
//! * [`contribution`] weights validation samples by how hard they are for the
//!   participating workers and scores each worker on the weighted samples.
//! * [`reputation`] turns contributions and quality-detection outcomes into an
//!   internal (per-task) reputation and folds it into an accumulated
//!   reputation with an asymmetric, streak-aware moving average.
//! * [`auction`] selects workers by reputation-weighted proportional share,
//!   derives payment upper bounds, and settles ex-post payments. Benchmark
//!   selection policies live next to it.
//! * [`flsim`] is a small synthetic federated-learning simulator built on
//!   multinomial logistic regression.
//! * [`harness`] wires everything into reproducible experiments that emit CSV.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom of this file fix the scalar to `f64`, which is what the simulator
//! and CLI use.

pub mod auction;
pub mod contribution;
mod error;
pub mod flsim;
pub mod harness;
pub mod reputation;
mod scalar;
pub mod seed;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Identifier of a worker (a data owner bidding for federated tasks).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct WorkerId(pub u32);

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for WorkerId {
    fn from(v: u32) -> Self {
        WorkerId(v)
    }
}

pub type PredictionMatrix = contribution::PredictionMatrix<f64>;
pub type SampleWeights = contribution::SampleWeights<f64>;
pub type RoundContribution = contribution::RoundContribution<f64>;
pub type TaskContribution = contribution::TaskContribution<f64>;

pub type ReputationParams = reputation::ReputationParams<f64>;
pub type ReputationRecord = reputation::ReputationRecord<f64>;
pub type ReputationLedger = reputation::ReputationLedger<f64>;

pub type Bid = auction::Bid<f64>;
pub type AuctionConfig = auction::AuctionConfig<f64>;
pub type AuctionOutcome = auction::AuctionOutcome<f64>;
pub type UtilityReport = auction::UtilityReport<f64>;

pub type LogisticModel = flsim::LogisticModel<f64>;
pub type Dataset = flsim::Dataset<f64>;
pub type Population = flsim::Population<f64>;
pub type QualityReport = flsim::QualityReport<f64>;
pub type AggregationWeights = flsim::AggregationWeights<f64>;
pub type TaskLog = flsim::TaskLog<f64>;
