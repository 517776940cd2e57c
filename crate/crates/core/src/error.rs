use thiserror::Error;

/// Errors raised by the numerical routines and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested feature is outside what this crate supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A Gram matrix failed to factorise even after diagonal jitter.
    #[error("covariance matrix is not positive definite (n = {n})")]
    NotPositiveDefinite { n: usize },

    /// A numerical scheme produced a non-finite state.
    #[error("scheme diverged at step {step}")]
    Divergence { step: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
