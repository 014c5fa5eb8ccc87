use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    /// The weighted series `sum_n n^k w_n` diverges, so the square-integrability
    /// domain of the k-th moment is trivial.
    #[error(
        "divergent moment: sum_n n^{k} w_n = infinity for {weights}; \
         square-integrability domain is {{0}}"
    )]
    DivergentMoment { weights: String, k: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
