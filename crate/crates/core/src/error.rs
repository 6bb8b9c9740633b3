use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel singularity: {0}")]
    Singularity(String),

    #[error("parameter regime not supported: {0}")]
    Regime(String),

    #[error("unsupported kernel: {0}")]
    Unsupported(String),

    #[error("matrix size {n} exceeds the configured cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("unresolved boundary layer: {0}")]
    Resolution(String),

    #[error("ambiguous result: {0}")]
    Ambiguous(String),

    #[error("truncation too severe: tail mass {tail:e} exceeds budget {budget:e}")]
    Truncation { tail: f64, budget: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
