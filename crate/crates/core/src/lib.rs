//! Multi-frequency phase ranging: frequency-plan design, closed-form
//! performance analysis, least-squares range estimation and seeded Monte
//! Carlo campaigns.

pub mod analysis;
pub mod design;
pub mod error;
pub mod estimator;
pub mod model;
pub mod montecarlo;
pub mod primes;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{ls_estimate, Estimate, EstimatorConfig};
pub use model::{
    synth_phases, wrap_phase, CMode, FrequencyPlan, NoiseKind, NoiseLevel, NoiseModel, PhaseVector,
    C_EXACT, C_PAPER_REPRO,
};
pub use rng::StreamKey;
