use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameter outside its physical range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A covariance matrix violates the uncertainty relation.
    #[error("unphysical state: {0}")]
    InvalidState(String),
    /// Measurement on a quadrature with non-positive variance, or a singular statistic.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Linear-algebra failure (non-convergence, singular solve).
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Fock-space truncation lost too much probability.
    #[error("cutoff too small: {0}")]
    Cutoff(String),
    /// A quadrature rule saw a non-finite integrand.
    #[error("integration failure: {0}")]
    Integration(String),
    /// Finite-size block too short for the requested confidence.
    #[error("block too small: {0}")]
    BlockTooSmall(String),
}

pub type Result<T> = std::result::Result<T, Error>;
