use thiserror::Error;

use crate::specfun::SpecFunError;

/// Failures of the analytical model or the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },
    #[error("relay transmit energy after processing cost is {0}, must be positive")]
    RelayPowerInfeasible(f64),
    #[error("success probability is zero")]
    DivideByZeroProb,
    #[error("argument {0} outside the function domain")]
    Domain(f64),
    #[error("series did not converge within {0} terms")]
    Convergence(usize),
    #[error("relay queue is unstable (utilization {rho})")]
    UnstableQueue { rho: f64 },
    #[error("relay queue exceeded {limit} packets in replication {replication}")]
    Diverged { replication: usize, limit: usize },
}

impl ModelError {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParam {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<SpecFunError> for ModelError {
    fn from(e: SpecFunError) -> Self {
        match e {
            SpecFunError::Domain(x) => ModelError::Domain(x),
            SpecFunError::Convergence(n) => ModelError::Convergence(n),
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
