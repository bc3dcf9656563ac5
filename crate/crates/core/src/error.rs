use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined
    /// (a point too close to a support, a size mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The spike does not satisfy the outlier condition.
    #[error("no outlier: margin 1 - sigma^2 * int dnu/(theta-x)^2 = {margin:.6e} is not positive")]
    NoOutlier { margin: f64 },

    /// An iterative solver stopped before reaching its tolerance.
    #[error("solver did not converge after {iterations} iterations (last residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    /// The outlier could not be isolated from the rest of the spectrum.
    #[error("no outlier event: {0}")]
    NoSeparation(String),

    /// A quadrature produced a non-finite value.
    #[error("integration error: {0}")]
    Integration(String),

    /// A dense factorization failed.
    #[error("numerical error: {0}")]
    Numeric(String),

    /// Malformed configuration or input document.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
