use thiserror::Error;

/// Errors raised by the sampler and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    State(String),

    /// A single sample needed more backward steps than the configured budget.
    #[error(
        "step budget of {budget} exceeded for beta = {beta} (expected steps are at least x0^beta = {lower_bound:.6e})"
    )]
    Budget {
        beta: f64,
        lower_bound: f64,
        budget: u64,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
