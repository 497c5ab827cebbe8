use thiserror::Error;

/// Errors raised by instance construction, analysis and verification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("span unavailable: initial distribution has no enumerable support and no declared span")]
    SpanUnavailable,

    #[error("charge mode unjustified: {0}")]
    ModeUnjustified(String),

    #[error("measure is not uniform")]
    NotUniform,

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("enumeration exceeded the leaf budget of {limit}")]
    BudgetOverflow { limit: u64 },

    #[error("ill-formed forest: {0}")]
    IllFormedForest(String),

    #[error("expected a {expected} trajectory, found {found}")]
    WrongWalkKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("condition failed: delta = {0} is not positive")]
    NonPositiveDelta(f64),

    #[error("inner series diverges: {0}")]
    DivergentSeries(String),

    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
