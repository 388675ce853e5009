use thiserror::Error;

/// Errors produced by plan construction, design, analysis and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid frequency plan: {0}")]
    InvalidPlan(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("phase vector has {got} entries but the plan has {expected} frequencies")]
    LengthMismatch { expected: usize, got: usize },

    #[error("phase {value} at index {index} is outside (-pi, pi]")]
    UnwrappedPhase { index: usize, value: f64 },

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("prime pool exhausted: need {needed} primes below the sieve cap {cap}")]
    PrimePoolExhausted { needed: usize, cap: usize },

    #[error("invalid estimator configuration: {0}")]
    InvalidEstimator(String),

    #[error("empty scan interval [{lo}, {hi}]")]
    EmptyScan { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid campaign: {}", .0.join("; "))]
    InvalidCampaign(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;
