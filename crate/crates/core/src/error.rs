use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("precision exhausted: need {needed} bits, cap is {cap}")]
    PrecisionExhausted { needed: u64, cap: u64 },
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("eigenvalue clustering: min gap {gap:e} below {threshold:e}")]
    Clustering { gap: f64, threshold: f64 },
    #[error("out of range: {0}")]
    Range(String),
    #[error("wrong regime: {0}")]
    Regime(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("cutoff too small: {0}")]
    Cutoff(String),
    #[error("eigenvalue table too short: need n = {need}, have {have}")]
    TableTooShort { need: usize, have: usize },
    #[error("dual sum truncation insufficient: {0}")]
    Truncation(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Results from a parallel map, failing with the first error in input order
/// (rayon's own `collect` reports whichever error a worker hit first).
pub fn in_order<T, E>(v: Vec<std::result::Result<T, E>>) -> std::result::Result<Vec<T>, E> {
    v.into_iter().collect()
}
