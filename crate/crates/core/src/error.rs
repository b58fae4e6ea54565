//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterate became non-finite or left the trust region |u| <= 1e12.
    #[error("divergence at step {step}")]
    Divergence { step: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A fixed-point iteration failed to reach its tolerance within the
    /// iteration budget implied by the contraction factor.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// The inner fixed point left the margin-extended grid box.
    #[error("domain escape: {0}")]
    DomainEscape(String),

    #[error("undefined rate: {0}")]
    UndefinedRate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
