use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mfi_core::CMode;

use crate::output::Format;
use crate::planfile::Method;

#[derive(Debug, Parser)]
#[command(name = "mfi", version, about = "Frequency-plan design and analysis for multi-frequency phase ranging")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input file (design request, plan, campaign, or phase record)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Speed of light: exact (299792458 m/s) or paper-repro (3e8 m/s)
    #[arg(long = "c-mode", global = true)]
    pub c_mode: Option<CMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a frequency plan and report its predicted performance
    Design(DesignArgs),
    /// Closed-form performance report for a plan file
    Analyze(AnalyzeArgs),
    /// LS range estimate from one phase vector
    Estimate(EstimateArgs),
    /// Run a Monte Carlo campaign
    Simulate,
    /// Estimate every experiment in a phase record file
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct DesignArgs {
    #[arg(long)]
    pub method: Option<Method>,

    #[arg(long = "f1-hz", alias = "f1")]
    pub f1_hz: Option<f64>,

    /// Top frequency for the towers method
    #[arg(long = "f-top-hz", alias = "fN")]
    pub f_top_hz: Option<f64>,

    #[arg(long = "bandwidth-hz", alias = "B")]
    pub bandwidth_hz: Option<f64>,

    #[arg(long, alias = "N")]
    pub count: Option<usize>,

    #[arg(long = "resolution-hz", alias = "res")]
    pub resolution_hz: Option<f64>,

    /// 1-based start index into the primes
    #[arg(long = "prime-index", alias = "i")]
    pub prime_index: Option<usize>,

    /// Fixed common factor instead of the largest that fits
    #[arg(long, alias = "K")]
    pub k: Option<u64>,

    #[arg(long = "umr-min-m")]
    pub umr_min_m: Option<f64>,

    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ReportArgs {
    /// SNR for the error predictions (default 10 dB)
    #[arg(long = "snr-db", conflicts_with = "sigma")]
    pub snr_db: Option<f64>,

    /// Phase noise std in radians, instead of --snr-db
    #[arg(long)]
    pub sigma: Option<f64>,

    #[arg(long = "mainlobe-m")]
    pub mainlobe_m: Option<f64>,

    #[arg(long = "scan-step-m")]
    pub scan_step_m: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Plan file (or use --config)
    #[arg(long)]
    pub plan: Option<PathBuf>,

    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args, Default)]
pub struct WindowArgs {
    #[arg(long = "lo-m", allow_hyphen_values = true)]
    pub lo_m: Option<f64>,

    #[arg(long = "hi-m", allow_hyphen_values = true)]
    pub hi_m: Option<f64>,

    #[arg(long = "step-m", default_value_t = 0.001)]
    pub step_m: f64,

    /// Parabolic refinement around the grid minimum
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub plan: Option<PathBuf>,

    /// Wrapped phases in radians, comma separated, in plan order
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub phases: Vec<f64>,

    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Phase record file (or use --config)
    #[arg(long)]
    pub records: Option<PathBuf>,

    #[command(flatten)]
    pub window: WindowArgs,

    /// Histogram bin width
    #[arg(long = "bin-m", default_value_t = 1.0)]
    pub bin_m: f64,
}
