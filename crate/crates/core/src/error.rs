use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid step path: {0}")]
    InvalidPath(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("divergent regime: moment order m = {m} must exceed alpha = {alpha}")]
    DivergentRegime { alpha: f64, m: f64 },

    #[error("characteristic function window error: {0}")]
    Window(String),

    #[error("degenerate generator: {0}")]
    Degenerate(String),

    #[error("quantile resolution error: {samples} samples cannot resolve tail level 1/{n}")]
    QuantileResolution { samples: usize, n: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
