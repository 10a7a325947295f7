//! Desk-scale federated-learning simulator.
//!
//! Workers hold synthetic Gaussian-cluster data whose labels are partly
//! corrupted to control data quality. Each round every winner runs local SGD
//! on a multinomial logistic model starting from the global model; the
//! publisher screens the local models with a leave-one-out validation-loss
//! test, scores contributions, and aggregates the passed models with
//! performance-based weights.

mod data;
mod detect;
mod model;
mod task;

pub use data::{generate_population, Dataset, Population, SyntheticTaskSpec, WorkerDataProfile};
pub use detect::{aggregation_weights, quality_detect, AggregationWeights, QualityReport};
pub use model::{local_train, LogisticModel};
pub use task::{run_task, RoundLog, Settlement, TaskInput, TaskLog};
