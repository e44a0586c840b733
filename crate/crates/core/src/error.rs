use thiserror::Error;

/// Library-wide error type. Variants are coarse on purpose: callers mostly
/// need to distinguish "bad input" from "the numerics went wrong".
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A state vector was handed to an evolver/observable expecting the
    /// other representation (full vector vs. per-sector blocks).
    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    /// Solver non-convergence, unstable mode matrix, resonant denominator.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
