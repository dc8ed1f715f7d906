//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain (e.g. a probability
    /// outside `[0, 1]`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A computed value left its guaranteed range by more than the allowed
    /// tolerance. This signals a malformed loss, not a data property.
    #[error("range error: {0}")]
    Range(String),

    /// Invalid configuration (unknown family, bad fractions, bad alpha, ...).
    #[error("config error: {0}")]
    Config(String),

    /// The data cannot support the requested operation (empty set, missing
    /// class, degenerate column).
    #[error("data error: {0}")]
    Data(String),

    /// A feature vector had the wrong arity for the model.
    #[error("arity mismatch: model expects {expected} features, got {got}")]
    Arity { expected: usize, got: usize },

    /// Internal representations are only defined for some model families.
    #[error("no internal representation for model family `{0}`")]
    UnsupportedRepresentation(String),

    /// CSV cell that failed to parse; coordinates are 1-based file positions.
    #[error("parse error at line {line}, column `{column}`: {msg}")]
    Parse {
        line: usize,
        column: String,
        msg: String,
    },

    /// A referenced column is missing or duplicated.
    #[error("schema error: {0}")]
    Schema(String),

    /// The label column was not binary after parsing.
    #[error("label error: {0}")]
    Label(String),

    /// Every selected subgroup mask was empty.
    #[error("empty subgroup: {0}")]
    EmptySubgroup(String),

    /// The sandwich inequality failed beyond tolerance; an implementation
    /// bug, never a data property.
    #[error("sandwich violation: {0}")]
    SandwichViolation(String),

    /// The boosting loop exceeded its iteration cap, which indicates a
    /// broken weak-learner contract. Carries the trace for diagnosis.
    #[error("iteration cap of {cap} rounds exceeded")]
    IterationCap {
        cap: usize,
        trace: Box<crate::mc_boost::BoostTrace>,
    },

    /// A basis fit broke a guarantee it was supposed to satisfy.
    #[error("basis violation: {0}")]
    BasisViolation(String),

    /// Filesystem/IO failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV reading/writing failure not tied to a cell.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
