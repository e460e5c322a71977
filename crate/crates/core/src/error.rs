use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model validation failed: {0}")]
    InvalidModel(String),
    #[error("matrix not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),
    #[error("conjugate gradient did not converge within {0} iterations (residual {1:.3e})")]
    CgMaxIter(usize, f64),
    #[error("hypergeometric series did not converge within {0} terms (|z| too large for the series regime)")]
    SeriesNonConvergent(usize),
    #[error("subsample size {requested} exceeds population {available}")]
    SubsampleTooLarge { requested: usize, available: usize },
    #[error("equivalence theorem inapplicable: {0}")]
    TheoremInapplicable(String),
    #[error("degenerate data vector (all zeros)")]
    DegenerateData,
    #[error("no positive definite system found on the search grid")]
    NoFeasiblePoint,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
