//! Seeded Monte Carlo campaigns.
//!
//! Trial `t` at SNR index `s` for plan label `l` draws its noise from the
//! stream `seed / hash(l) / s / t / frequency`, and per-trial results are
//! collected in trial order before any reduction. Output is therefore
//! bit-identical for any number of worker threads.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{self, PaBound};
use crate::error::{Error, Result};
use crate::estimator::{cost_s, unwrap_ok, EstimatorConfig, GridSearch};
use crate::model::{synth_phases, FrequencyPlan, NoiseKind, NoiseLevel, NoiseModel};
use crate::rng::{label_hash, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Mean squared range error of the LS estimate.
    Mse,
    /// Fraction of trials with |error| > lambda_N.
    Pf,
    /// Fraction of trials with S(q0 + practical UMR) < S(q0).
    Pa,
    /// Error histogram of an ambiguity sweep.
    Histogram,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Mse => "mse",
            Metric::Pf => "pf",
            Metric::Pa => "pa",
            Metric::Histogram => "histogram",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Metric::Mse),
            "pf" => Ok(Metric::Pf),
            "pa" => Ok(Metric::Pa),
            "histogram" => Ok(Metric::Histogram),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPlan {
    pub label: String,
    pub plan: FrequencyPlan,
}

impl LabeledPlan {
    pub fn new(label: impl Into<String>, plan: FrequencyPlan) -> Self {
        Self {
            label: label.into(),
            plan,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub plans: Vec<LabeledPlan>,
    pub q0: f64,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub estimator: EstimatorConfig,
    pub outputs: Vec<Metric>,
    pub noise: NoiseKind,
}

impl CampaignSpec {
    /// A campaign with complex AWGN noise and the MSE metric.
    pub fn new(plans: Vec<LabeledPlan>, q0: f64, snr_grid: Vec<f64>, trials: usize, seed: u64, estimator: EstimatorConfig) -> Self {
        Self {
            plans,
            q0,
            snr_grid,
            trials,
            seed,
            estimator,
            outputs: vec![Metric::Mse],
            noise: NoiseKind::ComplexAwgn,
        }
    }

    pub fn with_outputs(mut self, outputs: Vec<Metric>) -> Self {
        self.outputs = outputs;
        self
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.plans.is_empty() {
            problems.push("no plans".to_string());
        }
        let mut seen = HashSet::new();
        for p in &self.plans {
            if !seen.insert(p.label.as_str()) {
                problems.push(format!("duplicate plan label '{}'", p.label));
            }
        }
        if self.trials == 0 {
            problems.push("trials must be at least 1".into());
        }
        if self.snr_grid.is_empty() {
            problems.push("empty SNR grid".into());
        }
        if self.snr_grid.iter().any(|s| !s.is_finite()) {
            problems.push("non-finite SNR".into());
        }
        if !self.q0.is_finite() {
            problems.push("non-finite q0".into());
        }
        if let Err(e) = self.estimator.validate() {
            problems.push(e.to_string());
        }
        if self.outputs.is_empty() {
            problems.push("no outputs requested".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidCampaign(problems))
        }
    }
}

/// One point of an empirical curve with its theory columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub label: String,
    pub snr_db: f64,
    pub metric: Metric,
    pub value: f64,
    pub stderr: f64,
    pub mmse: f64,
    pub hmse: f64,
    pub crb: f64,
    pub pa_bound: Option<f64>,
    /// MSE over trials with |error| <= lambda_N (MSE rows only).
    pub inlier_mse: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

fn noise_model(kind: NoiseKind, snr_db: f64) -> Result<NoiseModel> {
    NoiseModel::new(kind, NoiseLevel::SnrDb(snr_db))
}

fn trial_stream(seed: u64, label: &str, snr_index: usize) -> StreamKey {
    StreamKey::new(seed).child(label_hash(label)).child(snr_index as u64)
}

/// Range errors q_hat - q0 of `trials` independent LS estimates, in trial order.
pub fn estimate_errors(
    plan: &FrequencyPlan,
    q0: f64,
    noise: &NoiseModel,
    search: &GridSearch,
    trials: usize,
    stream: &StreamKey,
) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let phases = synth_phases(plan, q0, noise, &stream.child(t as u64))?;
            Ok(search.search(&phases)?.q_hat - q0)
        })
        .collect()
}

/// Indicator per trial of S(q0 + practical UMR) < S(q0), in trial order.
fn pa_indicators(plan: &FrequencyPlan, q0: f64, noise: &NoiseModel, trials: usize, stream: &StreamKey) -> Result<Vec<bool>> {
    let alias = q0 + analysis::practical_umr(plan);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let phases = synth_phases(plan, q0, noise, &stream.child(t as u64))?;
            Ok(cost_s(&phases, plan, alias)? < cost_s(&phases, plan, q0)?)
        })
        .collect()
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn proportion(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn pa_bound_for(plan: &FrequencyPlan, snr_db: f64) -> PaBound {
    analysis::pa_lower_bound(plan.f1(), plan.bandwidth(), plan.len(), analysis::epsilon_of(plan), snr_db)
}

/// Runs every requested curve metric for every plan and SNR. Histogram
/// requests are served by [`run_ambiguity_sweep`] and skipped here.
pub fn run_campaign(spec: &CampaignSpec) -> Result<Vec<CurveRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for lp in &spec.plans {
        let plan = &lp.plan;
        let search = GridSearch::new(plan, spec.estimator)?;
        for (si, &snr) in spec.snr_grid.iter().enumerate() {
            let noise = noise_model(spec.noise, snr)?;
            let sigma = crate::model::sigma_theta_from_snr_db(snr);
            let stream = trial_stream(spec.seed, &lp.label, si);
            let needs_errors = spec.outputs.iter().any(|m| matches!(m, Metric::Mse | Metric::Pf));
            let errors = if needs_errors {
                estimate_errors(plan, spec.q0, &noise, &search, spec.trials, &stream)?
            } else {
                Vec::new()
            };
            let lambda = plan.shortest_wavelength();
            let row = |metric, value, stderr| CurveRow {
                label: lp.label.clone(),
                snr_db: snr,
                metric,
                value,
                stderr,
                mmse: analysis::mmse(plan, sigma),
                hmse: analysis::hmse(plan, sigma),
                crb: analysis::crb_from_variance(plan, 2.0 * (sigma * sigma)),
                pa_bound: None,
                inlier_mse: None,
                trials: spec.trials,
                seed: spec.seed,
            };
            for metric in &spec.outputs {
                match metric {
                    Metric::Mse => {
                        let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
                        let (value, stderr) = mean_and_stderr(&sq);
                        let inliers: Vec<f64> = errors.iter().filter(|e| e.abs() <= lambda).map(|e| e * e).collect();
                        let inlier = (!inliers.is_empty()).then(|| mean_and_stderr(&inliers).0);
                        rows.push(CurveRow {
                            inlier_mse: inlier,
                            ..row(Metric::Mse, value, stderr)
                        });
                    }
                    Metric::Pf => {
                        let fails = errors.iter().filter(|e| !unwrap_ok(spec.q0 + **e, spec.q0, plan)).count();
                        let (value, stderr) = proportion(fails, spec.trials);
                        rows.push(row(Metric::Pf, value, stderr));
                    }
                    Metric::Pa => {
                        // separate sub-stream so adding pa does not perturb mse/pf draws
                        let hits = pa_indicators(plan, spec.q0, &noise, spec.trials, &stream.child(u64::MAX))?
                            .into_iter()
                            .filter(|&h| h)
                            .count();
                        let (value, stderr) = proportion(hits, spec.trials);
                        rows.push(CurveRow {
                            pa_bound: Some(pa_bound_for(plan, snr).value),
                            ..row(Metric::Pa, value, stderr)
                        });
                    }
                    Metric::Histogram => {}
                }
            }
        }
    }
    Ok(rows)
}

pub fn run_mse_curve(spec: &CampaignSpec) -> Result<Vec<CurveRow>> {
    run_campaign(&spec.clone().with_outputs(vec![Metric::Mse]))
}

pub fn run_pf_curve(spec: &CampaignSpec) -> Result<Vec<CurveRow>> {
    run_campaign(&spec.clone().with_outputs(vec![Metric::Pf]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySweep {
    /// q_hat - q0 per trial, in trial order.
    pub errors: Vec<f64>,
    /// Non-empty bins only, ascending.
    pub histogram: Vec<HistogramBin>,
    pub practical_umr: f64,
    /// Share of errors within lambda_N of 0.
    pub near_fraction: f64,
    /// Share of errors within lambda_N of +-practical UMR.
    pub far_fraction: f64,
    /// Median of errors within half a mainlobe of +practical UMR.
    pub far_center: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub window: EstimatorConfig,
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub noise: NoiseKind,
    pub bin_width: f64,
}

fn histogram(values: &[f64], width: f64) -> Vec<HistogramBin> {
    let mut bins = std::collections::BTreeMap::new();
    for v in values {
        *bins.entry((v / width).floor() as i64).or_insert(0usize) += 1;
    }
    bins.into_iter()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Estimates over a wide window and bins the errors to expose the clusters
/// at 0 and at the practical UMR.
pub fn run_ambiguity_sweep(plan: &FrequencyPlan, q0: f64, params: &SweepParams) -> Result<AmbiguitySweep> {
    if params.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(params.bin_width > 0.0) {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let search = GridSearch::new(plan, params.window)?;
    let noise = noise_model(params.noise, params.snr_db)?;
    let stream = StreamKey::new(params.seed).child(label_hash("ambiguity-sweep"));
    let errors = estimate_errors(plan, q0, &noise, &search, params.trials, &stream)?;
    let pumr = analysis::practical_umr(plan);
    let lambda = plan.shortest_wavelength();
    let n = errors.len() as f64;
    let near = errors.iter().filter(|e| e.abs() <= lambda).count();
    let far = errors
        .iter()
        .filter(|e| (e.abs() - pumr).abs() <= lambda)
        .count();
    let half_lobe = plan.c() / (2.0 * plan.bandwidth());
    let far_center = median(errors.iter().copied().filter(|e| (e - pumr).abs() <= half_lobe).collect());
    Ok(AmbiguitySweep {
        histogram: histogram(&errors, params.bin_width),
        practical_umr: pumr,
        near_fraction: near as f64 / n,
        far_fraction: far as f64 / n,
        far_center,
        errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumrCheck {
    /// Share of trials with S(q0 + practical UMR) < S(q0).
    pub empirical: f64,
    pub stderr: f64,
    /// Share of LS estimates over [-UMR/2, 3 UMR/2] that land within
    /// lambda_N of the practical UMR.
    pub far_cluster_rate: f64,
    pub bound: PaBound,
    pub trials: usize,
}

/// Compares the empirical alias probability with the analytic lower bound,
/// using Gaussian phase noise and q0 = 0.
pub fn run_pumr_check(plan: &FrequencyPlan, snr_db: f64, trials: usize, seed: u64) -> Result<PumrCheck> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let noise = noise_model(NoiseKind::PhaseGaussian, snr_db)?;
    let stream = StreamKey::new(seed).child(label_hash("pumr-check"));
    let hits = pa_indicators(plan, 0.0, &noise, trials, &stream)?.into_iter().filter(|&h| h).count();
    let (empirical, stderr) = proportion(hits, trials);

    let full = analysis::umr(plan);
    let pumr = analysis::practical_umr(plan);
    let lambda = plan.shortest_wavelength();
    let window = EstimatorConfig::new(-full / 2.0, 1.5 * full, lambda / 20.0);
    let search = GridSearch::new(plan, window)?;
    let errors = estimate_errors(plan, 0.0, &noise, &search, trials, &stream)?;
    let far = errors.iter().filter(|e| (*e - pumr).abs() <= lambda).count();

    Ok(PumrCheck {
        empirical,
        stderr,
        far_cluster_rate: far as f64 / trials as f64,
        bound: pa_bound_for(plan, snr_db),
        trials,
    })
}

/// SNR bands of the double-threshold MSE curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleThreshold {
    /// SNRs where MMSE/2 <= MSE <= 2 MMSE and MSE > 4 CRB.
    pub mmse_band: Vec<f64>,
    /// SNRs where CRB/1.5 <= MSE <= 1.5 CRB.
    pub crb_band: Vec<f64>,
    /// MSE never increases from the last MMSE-band point to the first CRB-band point above it.
    pub monotone: bool,
}

impl DoubleThreshold {
    pub fn holds(&self) -> bool {
        match (self.mmse_band.first(), self.crb_band.last()) {
            (Some(lo), Some(hi)) => lo < hi && self.monotone,
            _ => false,
        }
    }
}

/// Locates the MMSE-tracking and CRB-tracking bands of one MSE curve.
/// Rows must belong to one plan and be sorted by SNR.
pub fn detect_double_threshold(rows: &[CurveRow]) -> DoubleThreshold {
    let in_mmse = |r: &CurveRow| r.value >= r.mmse / 2.0 && r.value <= 2.0 * r.mmse && r.value > 4.0 * r.crb;
    let in_crb = |r: &CurveRow| r.value >= r.crb / 1.5 && r.value <= 1.5 * r.crb;
    let mmse_band: Vec<f64> = rows.iter().filter(|r| in_mmse(r)).map(|r| r.snr_db).collect();
    let crb_band: Vec<f64> = rows.iter().filter(|r| in_crb(r)).map(|r| r.snr_db).collect();
    let monotone = match mmse_band.last() {
        Some(&start) => match crb_band.iter().find(|&&s| s > start) {
            Some(&end) => {
                let seg: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.snr_db >= start && r.snr_db <= end)
                    .map(|r| r.value)
                    .collect();
                seg.windows(2).all(|w| w[1] <= w[0])
            }
            None => false,
        },
        None => false,
    };
    DoubleThreshold {
        mmse_band,
        crb_band,
        monotone,
    }
}
