//! Crate-wide error type.

/// Errors produced by forward solvers, risk evaluation, estimators and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dual multiplier {index} is negative ({value})")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("bisection failed: {0}")]
    BracketFailure(String),

    #[error("parameter net would contain {size} points (limit {limit})")]
    NetTooLarge { size: u128, limit: u128 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("csv schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("estimator failure: {0}")]
    Estimator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
