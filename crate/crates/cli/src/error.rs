use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Record(String),

    #[error(transparent)]
    Core(#[from] mfi_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Stable short code printed as `error[code]`.
    pub fn code(&self) -> &'static str {
        use mfi_core::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Record(_) => "record",
            CliError::Core(e) => match e {
                E::NonFinite(_) => "non-finite",
                E::InvalidPlan(_) => "invalid-plan",
                E::InvalidNoise(_) => "invalid-noise",
                E::LengthMismatch { .. } => "length-mismatch",
                E::UnwrappedPhase { .. } => "unwrapped-phase",
                E::Infeasible(_) => "infeasible",
                E::PrimePoolExhausted { .. } => "prime-pool-exhausted",
                E::InvalidEstimator(_) => "invalid-estimator",
                E::EmptyScan { .. } => "empty-scan",
                E::InvalidArgument(_) => "invalid-argument",
                E::InvalidCampaign(_) => "invalid-campaign",
            },
        }
    }

    /// `error[code]: message` on one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.code(), msg.trim())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
