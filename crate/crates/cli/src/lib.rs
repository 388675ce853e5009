//! Command-line front end for `mfi-core`: plan design and analysis,
//! single-shot estimation, Monte Carlo campaigns and phase-record replay.

pub mod args;
pub mod campaign;
pub mod commands;
pub mod error;
pub mod output;
pub mod planfile;
pub mod record;

pub use error::{CliError, Result};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "MFI_WORKERS";
