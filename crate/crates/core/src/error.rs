use thiserror::Error;

use crate::geometry::PointId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    Malformed(String),

    #[error("point {id} has {got} coordinates, expected {expected}")]
    DimensionMismatch {
        id: PointId,
        expected: usize,
        got: usize,
    },

    #[error("duplicate point id {0}")]
    DuplicateId(PointId),

    #[error("unknown point id {0}")]
    UnknownId(PointId),

    #[error("matrix is not positive semi-definite (pivot {pivot:e} below tolerance)")]
    NotPsd { pivot: f64 },

    #[error("expected a set of size {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("weight profile regime does not match this objective: {0}")]
    RegimeMismatch(String),

    #[error("subset-sum oracle is limited to {cap} elements, got {got}")]
    OracleTooLarge { cap: usize, got: usize },

    #[error("enumeration of {count} candidates exceeds the cap of {cap}")]
    GuardExceeded { count: u128, cap: u128 },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("local search exceeded {0} swaps")]
    IterationCap(usize),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("rejection sampling gave up after {0} attempts")]
    RejectionExhausted(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
