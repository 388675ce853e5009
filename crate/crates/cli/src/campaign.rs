//! Campaign configuration files.
//!
//! ```toml
//! seed = 7
//! trials = 2000
//! q0_m = 0.0
//! snr_db = [0.0, 5.0, 10.0]
//! noise = "complex-awgn"
//! outputs = ["mse", "pf"]
//! c_mode = "paper-repro"
//!
//! [estimator]
//! step_m = 0.01            # window defaults to +-c/(2 df) of the first plan
//!
//! [[plan]]
//! label = "rips"
//! method = "rips"
//! f1_hz = 400e6
//! bandwidth_hz = 20e6
//! count = 21
//! ```
//!
//! A plan entry is exactly one of: a `file` (plan TOML, relative to the
//! config), explicit `f1_hz`/`resolution_hz`/`spacings`, or a `method` with
//! designer parameters.

use std::path::{Path, PathBuf};

use mfi_core::montecarlo::{CampaignSpec, LabeledPlan, Metric, SweepParams};
use mfi_core::{CMode, EstimatorConfig, FrequencyPlan, NoiseKind};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::planfile::{DesignRequest, Method, PlanFile};

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_PF_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub search_lo_m: Option<f64>,
    pub search_hi_m: Option<f64>,
    pub step_m: f64,
    #[serde(default)]
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub label: String,
    pub file: Option<PathBuf>,
    pub f1_hz: Option<f64>,
    pub resolution_hz: Option<f64>,
    pub spacings: Option<Vec<u64>>,
    pub method: Option<Method>,
    pub f_top_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub count: Option<usize>,
    pub prime_index: Option<usize>,
    pub k: Option<u64>,
    pub umr_requirement_m: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSection {
    pub label: Option<String>,
    pub snr_db: f64,
    pub trials: usize,
    pub search_lo_m: f64,
    pub search_hi_m: f64,
    pub step_m: f64,
    #[serde(default)]
    pub refine: bool,
    pub bin_width_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    #[serde(default)]
    pub q0_m: f64,
    pub snr_db: Vec<f64>,
    pub noise: Option<String>,
    pub outputs: Option<Vec<String>>,
    pub c_mode: Option<String>,
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub plan: Vec<PlanEntry>,
    pub histogram: Option<HistogramSection>,
}

/// A resolved campaign: the core spec plus the optional ambiguity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub spec: CampaignSpec,
    pub sweep: Option<(LabeledPlan, SweepParams)>,
}

impl PlanEntry {
    fn resolve(&self, base: &Path, mode: CMode) -> std::result::Result<FrequencyPlan, String> {
        let explicit = self.spacings.is_some();
        let sources = [self.file.is_some(), explicit, self.method.is_some()]
            .iter()
            .filter(|&&s| s)
            .count();
        if sources != 1 {
            return Err(format!(
                "plan '{}' needs exactly one of file, spacings or method",
                self.label
            ));
        }
        let err = |e: CliError| format!("plan '{}': {}", self.label, e);
        if let Some(file) = &self.file {
            return PlanFile::read(&base.join(file)).and_then(|f| f.to_plan(Some(mode))).map_err(err);
        }
        if let Some(spacings) = &self.spacings {
            let (Some(f1), Some(res)) = (self.f1_hz, self.resolution_hz) else {
                return Err(format!("plan '{}' with spacings needs f1_hz and resolution_hz", self.label));
            };
            return FrequencyPlan::new(f1, res, spacings.clone(), mode.speed()).map_err(|e| err(e.into()));
        }
        let method = self.method.expect("one source is set");
        let (Some(bandwidth_hz), Some(count)) = (self.bandwidth_hz, self.count) else {
            return Err(format!("plan '{}' needs bandwidth_hz and count", self.label));
        };
        let req = DesignRequest {
            method,
            f1_hz: self.f1_hz,
            f_top_hz: self.f_top_hz,
            bandwidth_hz,
            count,
            resolution_hz: self.resolution_hz,
            prime_index: self.prime_index,
            k: self.k,
            umr_requirement_m: self.umr_requirement_m,
            seed: self.seed,
        };
        req.design(mode).map(|d| d.plan).map_err(err)
    }
}

impl CampaignFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.message()))
    }

    /// Resolves plans and defaults. Every problem found is reported together.
    pub fn resolve(&self, base: &Path, seed_flag: Option<u64>, mode_flag: Option<CMode>) -> Result<Campaign> {
        let mut problems = Vec::new();
        let mode = match (mode_flag, &self.c_mode) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse().unwrap_or_else(|e: mfi_core::Error| {
                problems.push(e.to_string());
                CMode::Exact
            }),
            (None, None) => CMode::Exact,
        };
        let noise = match &self.noise {
            Some(s) => s.parse().unwrap_or_else(|e: mfi_core::Error| {
                problems.push(e.to_string());
                NoiseKind::ComplexAwgn
            }),
            None => NoiseKind::ComplexAwgn,
        };
        let outputs: Vec<Metric> = self
            .outputs
            .clone()
            .unwrap_or_else(|| vec!["mse".into()])
            .iter()
            .filter_map(|s| s.parse().map_err(|e: mfi_core::Error| problems.push(e.to_string())).ok())
            .collect();
        let seed = seed_flag.or(self.seed).unwrap_or_else(|| {
            problems.push("no seed: set `seed` in the config or pass --seed".into());
            0
        });
        let mut plans = Vec::new();
        for entry in &self.plan {
            match entry.resolve(base, mode) {
                Ok(p) => plans.push(LabeledPlan::new(entry.label.clone(), p)),
                Err(e) => problems.push(e),
            }
        }
        let only_pf = !outputs.is_empty() && outputs.iter().all(|m| *m == Metric::Pf);
        let trials = self.trials.unwrap_or(if only_pf { DEFAULT_PF_TRIALS } else { DEFAULT_TRIALS });
        let est = &self.estimator;
        let estimator = match (est.search_lo_m, est.search_hi_m, plans.first()) {
            (Some(lo), Some(hi), _) => EstimatorConfig::new(lo, hi, est.step_m),
            (None, None, Some(first)) => EstimatorConfig::half_beat_window(&first.plan, est.step_m),
            (None, None, None) => EstimatorConfig::new(0.0, 1.0, est.step_m),
            _ => {
                problems.push("set both search_lo_m and search_hi_m, or neither".into());
                EstimatorConfig::new(0.0, 1.0, est.step_m)
            }
        }
        .with_refine(est.refine);
        let spec = CampaignSpec {
            plans,
            q0: self.q0_m,
            snr_grid: self.snr_db.clone(),
            trials,
            seed,
            estimator,
            outputs: outputs.into_iter().filter(|m| *m != Metric::Histogram).collect(),
            noise,
        };
        let wants_histogram = self.outputs.iter().flatten().any(|s| s == "histogram");
        let sweep = match (&self.histogram, wants_histogram) {
            (Some(h), _) => {
                let label = h.label.clone().or_else(|| spec.plans.first().map(|p| p.label.clone()));
                match label.and_then(|l| spec.plans.iter().find(|p| p.label == l)) {
                    Some(lp) => Some((
                        lp.clone(),
                        SweepParams {
                            window: EstimatorConfig::new(h.search_lo_m, h.search_hi_m, h.step_m).with_refine(h.refine),
                            snr_db: h.snr_db,
                            trials: h.trials,
                            seed,
                            noise,
                            bin_width: h.bin_width_m.unwrap_or(1.0),
                        },
                    )),
                    None => {
                        problems.push("histogram section names no known plan".into());
                        None
                    }
                }
            }
            (None, true) => {
                problems.push("histogram output requested without a [histogram] section".into());
                None
            }
            (None, false) => None,
        };
        if spec.outputs.is_empty() && sweep.is_none() {
            problems.push("no outputs requested".into());
        }
        if let Err(mfi_core::Error::InvalidCampaign(list)) = spec.validate() {
            problems.extend(list.into_iter().filter(|p| !(p == "no outputs requested" && sweep.is_some())));
        }
        if !problems.is_empty() {
            problems.dedup();
            return Err(mfi_core::Error::InvalidCampaign(problems).into());
        }
        Ok(Campaign { spec, sweep })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CampaignFile {
        toml::from_str(text).unwrap()
    }

    const BASE: &str = r#"
seed = 3
snr_db = [10.0]
[estimator]
step_m = 0.01
[[plan]]
label = "rips"
method = "rips"
f1_hz = 400e6
bandwidth_hz = 20e6
count = 21
"#;

    #[test]
    fn defaults_fill_in() {
        let c = parse(BASE).resolve(Path::new("."), None, None).unwrap();
        assert_eq!(c.spec.trials, DEFAULT_TRIALS);
        assert_eq!(c.spec.noise, NoiseKind::ComplexAwgn);
        assert_eq!(c.spec.outputs, vec![Metric::Mse]);
        let half = mfi_core::C_EXACT / 2e6;
        assert!((c.spec.estimator.search_hi - half).abs() < 1e-9);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn pf_only_defaults_to_more_trials() {
        let text = format!("outputs = [\"pf\"]\n{BASE}");
        let c = parse(&text).resolve(Path::new("."), Some(9), Some(CMode::PaperRepro)).unwrap();
        assert_eq!(c.spec.trials, DEFAULT_PF_TRIALS);
        assert_eq!(c.spec.seed, 9);
        assert_eq!(c.spec.plans[0].plan.c(), 3e8);
    }

    #[test]
    fn problems_are_reported_together() {
        let text = BASE.replace("seed = 3", "trials = 0\noutputs = [\"bogus\"]");
        match parse(&text).resolve(Path::new("."), None, None) {
            Err(CliError::Core(mfi_core::Error::InvalidCampaign(list))) => {
                assert!(list.len() >= 3, "{list:?}");
                assert!(list.iter().any(|p| p.contains("seed")));
                assert!(list.iter().any(|p| p.contains("trials")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("step_m", "step");
        assert!(toml::from_str::<CampaignFile>(&text).is_err());
    }

    #[test]
    fn plan_entry_needs_one_source() {
        let text = BASE.replace("method = \"rips\"", "method = \"rips\"\nspacings = [1, 2]");
        assert!(parse(&text).resolve(Path::new("."), None, None).is_err());
    }
}
