use thiserror::Error;

/// Errors raised by capacity, bound and oracle computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("solver failed to converge after {iterations} iterations (target {target})")]
    Solver { iterations: usize, target: f64 },

    #[error("series did not converge within {terms} terms")]
    Series { terms: usize },

    #[error("truncation tail {tail:e} exceeds tolerance {tolerance:e}; try cutoff {suggested}")]
    TailBound {
        tail: f64,
        tolerance: f64,
        suggested: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("oracle needs size {needed}, above the limit {limit}")]
    Resource { needed: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_energy(energy: f64) -> Result<()> {
    if energy.is_finite() && energy >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("mean photon number must be finite and >= 0, got {energy}")))
    }
}

pub(crate) fn check_modes(m: u64) -> Result<()> {
    if m >= 1 {
        Ok(())
    } else {
        Err(domain("mode count m must be >= 1"))
    }
}
