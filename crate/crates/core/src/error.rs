use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("symmetry violation {violation:e} exceeds tolerance {tolerance:e}")]
    Validation { violation: f64, tolerance: f64 },

    #[error("degenerate point: {0}")]
    Degenerate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(
        "line search failed after {evaluations} evaluations (bracket [{lo:e}, {hi:e}], last alpha {alpha:e})"
    )]
    LineSearch {
        lo: f64,
        hi: f64,
        alpha: f64,
        evaluations: usize,
    },

    #[error("power iteration breakdown: {0}")]
    Breakdown(String),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
