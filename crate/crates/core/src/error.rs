use std::path::PathBuf;

use thiserror::Error;

use crate::WorkerId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prediction matrix needs at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid value for {what}: {value}")]
    InvalidValue { what: &'static str, value: f64 },

    #[error("round {0} referenced by participation does not exist")]
    UnknownRound(usize),

    #[error("worker {worker} has no contribution in round {round}")]
    MissingWorker { worker: WorkerId, round: usize },

    #[error("trust input needs at least one quality detection")]
    ZeroDetections,

    #[error("auction has no bids")]
    EmptyMarket,

    #[error("duplicate worker {0}")]
    DuplicateWorker(WorkerId),

    #[error("no accumulated reputation for worker {0}")]
    MissingReputation(WorkerId),

    #[error("no internal reputation for winner {0}")]
    MissingInternal(WorkerId),

    #[error("invalid worker profile for worker {worker}: {reason}")]
    InvalidProfile { worker: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
