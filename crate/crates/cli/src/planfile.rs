//! Plan files and design requests.
//!
//! A plan file is TOML with unit-suffixed keys:
//!
//! ```toml
//! f1_hz = 410000000.0
//! resolution_hz = 65.0
//! spacings = [7400, 8200]      # grid units
//! c_mode = "paper-repro"
//! ```
//!
//! Designer output also carries a `[design]` table echoing the request and
//! a `[derived]` table with frequencies and spacings in Hz. Both are
//! informational and ignored when the plan is read back.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mfi_core::design::{self, DesignParams, PrimeSelection};
use mfi_core::{CMode, FrequencyPlan, StreamKey};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rips,
    Towers,
    ConstrainedOptimal,
    PrimeMinError,
    PrimeMaxError,
    Random,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rips" => Ok(Method::Rips),
            "towers" => Ok(Method::Towers),
            "constrained-optimal" => Ok(Method::ConstrainedOptimal),
            "prime-min-error" => Ok(Method::PrimeMinError),
            "prime-max-error" => Ok(Method::PrimeMaxError),
            "random" => Ok(Method::Random),
            other => Err(format!("unknown design method '{other}'")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rips => "rips",
            Method::Towers => "towers",
            Method::ConstrainedOptimal => "constrained-optimal",
            Method::PrimeMinError => "prime-min-error",
            Method::PrimeMaxError => "prime-max-error",
            Method::Random => "random",
        })
    }
}

/// Everything a designer may need; each method reads the fields it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRequest {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_top_hz: Option<f64>,
    pub bandwidth_hz: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub umr_requirement_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A designed plan plus what the designer reports beside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Designed {
    pub plan: FrequencyPlan,
    pub selection: Option<PrimeSelection>,
    pub snap_error_hz: Option<f64>,
}

fn need<T>(value: Option<T>, name: &str, method: Method) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("method {method} needs {name}")))
}

impl DesignRequest {
    pub fn design(&self, c_mode: CMode) -> Result<Designed> {
        let c = c_mode.speed();
        let m = self.method;
        let plain = |plan| Designed {
            plan,
            selection: None,
            snap_error_hz: None,
        };
        Ok(match m {
            Method::Rips => plain(design::design_rips(
                need(self.f1_hz, "f1", m)?,
                self.bandwidth_hz,
                self.count,
                self.resolution_hz,
                c,
            )?),
            Method::Towers => {
                let t = design::design_towers(
                    need(self.f_top_hz, "fN (top frequency)", m)?,
                    self.bandwidth_hz,
                    self.count,
                    need(self.resolution_hz, "a resolution", m)?,
                    c,
                )?;
                Designed {
                    plan: t.plan,
                    selection: None,
                    snap_error_hz: Some(t.max_snap_error),
                }
            }
            Method::ConstrainedOptimal => plain(design::design_constrained_optimal(
                need(self.f1_hz, "f1", m)?,
                self.bandwidth_hz,
                self.count,
                need(self.resolution_hz, "a resolution", m)?,
                c,
            )?),
            Method::PrimeMinError | Method::PrimeMaxError => {
                let params = DesignParams {
                    bandwidth: self.bandwidth_hz,
                    count: self.count,
                    resolution: need(self.resolution_hz, "a resolution", m)?,
                    prime_index: self.prime_index.unwrap_or(1),
                    k: self.k,
                    umr_requirement: self.umr_requirement_m,
                };
                let f1 = need(self.f1_hz, "f1", m)?;
                let d = if m == Method::PrimeMinError {
                    design::design_prime_min_error(&params, f1, c)?
                } else {
                    design::design_prime_max_error(&params, f1, c)?
                };
                Designed {
                    plan: d.plan,
                    selection: Some(d.selection),
                    snap_error_hz: None,
                }
            }
            Method::Random => plain(design::design_random(
                need(self.f1_hz, "f1", m)?,
                self.bandwidth_hz,
                self.count,
                need(self.resolution_hz, "a resolution", m)?,
                c,
                &StreamKey::new(need(self.seed, "a seed", m)?),
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEcho {
    pub method: Method,
    pub bandwidth_hz: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap_error_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub frequencies_hz: Vec<f64>,
    pub spacings_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub f1_hz: f64,
    pub resolution_hz: f64,
    pub spacings: Vec<u64>,
    pub c_mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<Derived>,
}

impl PlanFile {
    pub fn from_plan(plan: &FrequencyPlan) -> Self {
        let mode = CMode::from_speed(plan.c()).unwrap_or(CMode::Exact);
        Self {
            f1_hz: plan.f1(),
            resolution_hz: plan.resolution(),
            spacings: plan.spacings().to_vec(),
            c_mode: mode.to_string(),
            design: None,
            derived: Some(Derived {
                frequencies_hz: plan.frequencies(),
                spacings_hz: plan.spacings_hz(),
            }),
        }
    }

    pub fn from_design(req: &DesignRequest, d: &Designed) -> Self {
        let mut f = Self::from_plan(&d.plan);
        f.design = Some(DesignEcho {
            method: req.method,
            bandwidth_hz: req.bandwidth_hz,
            count: req.count,
            resolution_hz: Some(d.plan.resolution()),
            prime_index: d.selection.as_ref().map(|s| s.prime_index),
            k: d.selection.as_ref().map(|s| s.k),
            snap_error_hz: d.snap_error_hz,
            seed: req.seed,
        });
        f
    }

    pub fn c_mode(&self) -> Result<CMode> {
        self.c_mode.parse().map_err(|e: mfi_core::Error| CliError::Config(e.to_string()))
    }

    /// Builds the plan, with `override_mode` replacing the file's c-mode.
    pub fn to_plan(&self, override_mode: Option<CMode>) -> Result<FrequencyPlan> {
        let mode = match override_mode {
            Some(m) => m,
            None => self.c_mode()?,
        };
        Ok(FrequencyPlan::new(self.f1_hz, self.resolution_hz, self.spacings.clone(), mode.speed())?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan files serialise")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.message()))
    }
}
