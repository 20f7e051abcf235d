use thiserror::Error;

/// Errors produced by the model, sampler, exact and estimator layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inadmissible in-degree sequence: {0}")]
    Inadmissible(String),

    #[error("operation requires a finite alpha")]
    InfiniteAlpha,

    #[error("enumeration budget exceeded: kn = {kn} > {budget}")]
    BudgetExceeded { kn: u64, budget: u64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("chi-square pooling failed: {0}")]
    Pooling(String),
}

pub type Result<T> = std::result::Result<T, Error>;
