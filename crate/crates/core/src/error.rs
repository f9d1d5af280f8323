use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("coefficient {index} failed the resolution-doubling check (gap {deviation:e})")]
    Convergence { index: i64, deviation: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("weights sum to zero")]
    ZeroSum,

    #[error("weights are not normalized (sum {sum})")]
    Unnormalized { sum: f64 },

    #[error("window mismatch: {0}")]
    Window(String),

    #[error("no rows or columns left after restriction")]
    EmptyRestriction,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid system: {0}")]
    System(String),

    #[error("invalid joining: {0}")]
    Joining(String),

    #[error("operator is not Markov: {0}")]
    NotMarkov(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
