//! Least-squares grid-search range estimation from wrapped phases.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FrequencyPlan, PhaseVector};

/// Grid costs closer than this (rad^2) count as equal; the lower q wins.
pub const TIE_TOLERANCE: f64 = 1e-12;

const CHUNK: usize = 2048;
const FOUR_PI_SQ: f64 = TAU * TAU;
// adding and subtracting 1.5 * 2^52 rounds to the nearest integer for |x| < 2^51
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

#[inline(always)]
fn frac(x: f64) -> f64 {
    x - ((x + ROUND_MAGIC) - ROUND_MAGIC)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub search_lo: f64,
    pub search_hi: f64,
    pub step: f64,
    pub refine: bool,
}

impl EstimatorConfig {
    pub fn new(search_lo: f64, search_hi: f64, step: f64) -> Self {
        Self {
            search_lo,
            search_hi,
            step,
            refine: false,
        }
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    /// The symmetric window +-c/(2 df) with df = B/(N-1).
    pub fn half_beat_window(plan: &FrequencyPlan, step: f64) -> Self {
        let df = plan.bandwidth() / (plan.len() - 1) as f64;
        let half = plan.c() / (2.0 * df);
        Self::new(-half, half, step)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi, step) = (self.search_lo, self.search_hi, self.step);
        if !lo.is_finite() || !hi.is_finite() || !step.is_finite() {
            return Err(Error::NonFinite("estimator window"));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidEstimator(format!("step must be positive, got {step}")));
        }
        if !(lo < hi) {
            return Err(Error::InvalidEstimator(format!("empty window [{lo}, {hi}]")));
        }
        if hi - lo < step {
            return Err(Error::InvalidEstimator(format!(
                "window [{lo}, {hi}] is narrower than one step {step}"
            )));
        }
        Ok(())
    }

    /// Number of grid points lo, lo + step, ... not exceeding hi.
    pub fn grid_len(&self) -> usize {
        ((self.search_hi - self.search_lo) / self.step * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn grid_point(&self, index: usize) -> f64 {
        self.search_lo + index as f64 * self.step
    }

    /// Whether the step resolves the shortest wavelength (step <= lambda_N / 4).
    pub fn resolves(&self, plan: &FrequencyPlan) -> bool {
        self.step <= plan.shortest_wavelength() / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub q_hat: f64,
    pub cost_at_min: f64,
    pub grid_index: usize,
    pub refined: bool,
}

/// Per-plan precomputation shared by every phase vector searched on one grid.
#[derive(Debug, Clone)]
pub struct GridSearch {
    cfg: EstimatorConfig,
    cycles_per_meter: Vec<f64>,
    len: usize,
}

impl GridSearch {
    pub fn new(plan: &FrequencyPlan, cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        if plan.len() < 2 {
            return Err(Error::InvalidEstimator("at least two frequencies are required".into()));
        }
        let c = plan.c();
        Ok(Self {
            cfg,
            cycles_per_meter: plan.frequencies().into_iter().map(|f| f / c).collect(),
            len: cfg.grid_len(),
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    fn cycles(&self, phases: &PhaseVector) -> Result<Vec<f64>> {
        if phases.len() != self.cycles_per_meter.len() {
            return Err(Error::LengthMismatch {
                expected: self.cycles_per_meter.len(),
                got: phases.len(),
            });
        }
        Ok(phases.as_slice().iter().map(|p| p / TAU).collect())
    }

    /// Same operation order as the chunked scan.
    fn cost_cycles(&self, a: &[f64], q: f64) -> f64 {
        a.iter().zip(&self.cycles_per_meter).fold(0.0, |s, (ai, bi)| {
            let r = frac(ai - q * bi);
            s + r * r
        })
    }

    /// Best (value, index) over grid indices [start, end), in cycles^2.
    fn scan_chunk(&self, a: &[f64], start: usize, end: usize) -> (f64, usize) {
        let n = end - start;
        let mut qs = [0.0f64; CHUNK];
        let mut acc = [0.0f64; CHUNK];
        for (j, q) in qs[..n].iter_mut().enumerate() {
            *q = self.cfg.grid_point(start + j);
        }
        for (ai, bi) in a.iter().zip(&self.cycles_per_meter) {
            for (s, q) in acc[..n].iter_mut().zip(&qs[..n]) {
                let r = frac(ai - q * bi);
                *s += r * r;
            }
        }
        let tol = TIE_TOLERANCE / FOUR_PI_SQ;
        let mut best = (f64::INFINITY, start);
        for (j, &v) in acc[..n].iter().enumerate() {
            if v < best.0 - tol {
                best = (v, start + j);
            }
        }
        best
    }

    pub fn search(&self, phases: &PhaseVector) -> Result<Estimate> {
        let a = self.cycles(phases)?;
        let chunks = self.len.div_ceil(CHUNK);
        let scan = |c: usize| self.scan_chunk(&a, c * CHUNK, ((c + 1) * CHUNK).min(self.len));
        let bests: Vec<(f64, usize)> = if chunks > 4 {
            (0..chunks).into_par_iter().map(scan).collect()
        } else {
            (0..chunks).map(scan).collect()
        };
        let tol = TIE_TOLERANCE / FOUR_PI_SQ;
        let (value, index) = bests
            .into_iter()
            .fold((f64::INFINITY, 0), |best, cand| if cand.0 < best.0 - tol { cand } else { best });
        let q_grid = self.cfg.grid_point(index);
        let mut est = Estimate {
            q_hat: q_grid,
            cost_at_min: FOUR_PI_SQ * value,
            grid_index: index,
            refined: false,
        };
        if self.cfg.refine && index > 0 && index + 1 < self.len {
            let left = self.cost_cycles(&a, self.cfg.grid_point(index - 1));
            let right = self.cost_cycles(&a, self.cfg.grid_point(index + 1));
            let curve = left - 2.0 * value + right;
            if curve > 0.0 {
                let shift = (0.5 * (left - right) / curve).clamp(-0.5, 0.5);
                let q = (q_grid + shift * self.cfg.step).clamp(self.cfg.search_lo, self.cfg.search_hi);
                let refined_cost = self.cost_cycles(&a, q);
                if refined_cost <= value {
                    est.q_hat = q;
                    est.cost_at_min = FOUR_PI_SQ * refined_cost;
                    est.refined = true;
                }
            }
        }
        Ok(est)
    }
}

fn sum_sq(values: impl Iterator<Item = f64>) -> f64 {
    // Neumaier summation; the plain loop is exact enough for short plans
    let mut sum = 0.0;
    let mut comp = 0.0;
    for r in values {
        let t = r * r;
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

fn check_lengths(phases: &PhaseVector, plan: &FrequencyPlan) -> Result<()> {
    phases.check_against(plan)?;
    if plan.len() < 2 {
        return Err(Error::InvalidArgument("at least two frequencies are required".into()));
    }
    Ok(())
}

/// S(q) = sum_i wrap(phi_i - 2 pi q f_i / c)^2, rad^2.
pub fn cost_s(phases: &PhaseVector, plan: &FrequencyPlan, q: f64) -> Result<f64> {
    check_lengths(phases, plan)?;
    let c = plan.c();
    let terms = phases
        .as_slice()
        .iter()
        .zip(plan.frequencies())
        .map(|(p, f)| frac(p / TAU - q * (f / c)));
    Ok(FOUR_PI_SQ * sum_sq(terms))
}

/// |sum_i exp(j (phi_i - 2 pi q f_i / c))|^2 / N^2; larger is better.
pub fn cost_complex(phases: &PhaseVector, plan: &FrequencyPlan, q: f64) -> Result<f64> {
    check_lengths(phases, plan)?;
    let c = plan.c();
    let sum: Complex64 = phases
        .as_slice()
        .iter()
        .zip(plan.frequencies())
        .map(|(p, f)| Complex64::from_polar(1.0, TAU * frac(p / TAU - q * (f / c))))
        .sum();
    let n = plan.len() as f64;
    Ok(sum.norm_sqr() / (n * n))
}

/// Grid argmin of S(q), optionally refined by a parabola through the
/// neighbouring grid costs.
pub fn ls_estimate(phases: &PhaseVector, plan: &FrequencyPlan, cfg: &EstimatorConfig) -> Result<Estimate> {
    GridSearch::new(plan, *cfg)?.search(phases)
}

/// Grid argmax of the complex surrogate, lowest q on ties.
pub fn complex_grid_argmax(phases: &PhaseVector, plan: &FrequencyPlan, cfg: &EstimatorConfig) -> Result<usize> {
    cfg.validate()?;
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..cfg.grid_len() {
        let v = cost_complex(phases, plan, cfg.grid_point(k))?;
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(best.1)
}

/// Re sum_i exp(j (phi_i - 2 pi q f_i / c)) / N, the small-residual
/// approximation 1 - S(q) / (2N).
pub fn cost_cosine(phases: &PhaseVector, plan: &FrequencyPlan, q: f64) -> Result<f64> {
    check_lengths(phases, plan)?;
    let c = plan.c();
    let sum: f64 = phases
        .as_slice()
        .iter()
        .zip(plan.frequencies())
        .map(|(p, f)| (TAU * frac(p / TAU - q * (f / c))).cos())
        .sum();
    Ok(sum / plan.len() as f64)
}

/// Grid argmax of the coherent cosine sum, lowest q on ties.
pub fn cosine_grid_argmax(phases: &PhaseVector, plan: &FrequencyPlan, cfg: &EstimatorConfig) -> Result<usize> {
    cfg.validate()?;
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..cfg.grid_len() {
        let v = cost_cosine(phases, plan, cfg.grid_point(k))?;
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(best.1)
}

/// True iff |q_hat - q0| <= lambda_N.
pub fn unwrap_ok(q_hat: f64, q0: f64, plan: &FrequencyPlan) -> bool {
    (q_hat - q0).abs() <= plan.shortest_wavelength()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostPoint {
    pub q: f64,
    pub cost_s: f64,
    pub cost_complex: f64,
}

/// Both cost functions sampled at the given ranges.
pub fn cost_curves(phases: &PhaseVector, plan: &FrequencyPlan, qs: &[f64]) -> Result<Vec<CostPoint>> {
    qs.iter()
        .map(|&q| {
            Ok(CostPoint {
                q,
                cost_s: cost_s(phases, plan, q)?,
                cost_complex: cost_complex(phases, plan, q)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{practical_umr, umr};
    use crate::model::{
        sigma_theta_from_snr_db, synth_phases, wrap, NoiseModel, C_EXACT, C_PAPER_REPRO,
    };
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    fn plan(f1: f64, res: f64, sp: Vec<u64>, c: f64) -> FrequencyPlan {
        FrequencyPlan::new(f1, res, sp, c).unwrap()
    }

    fn clean(p: &FrequencyPlan, q0: f64) -> PhaseVector {
        synth_phases(p, q0, &NoiseModel::none(), &StreamKey::new(0)).unwrap()
    }

    fn slow_cost(phases: &PhaseVector, p: &FrequencyPlan, q: f64) -> f64 {
        phases
            .as_slice()
            .iter()
            .zip(p.frequencies())
            .map(|(ph, f)| wrap(ph - TAU * q * f / p.c()).powi(2))
            .sum()
    }

    #[test]
    fn cost_zero_at_truth_and_at_umr() {
        let p = plan(400e6, 1e6, vec![1, 3, 2, 5], C_PAPER_REPRO);
        let ph = clean(&p, 12.3);
        assert!(cost_s(&ph, &p, 12.3).unwrap() < 1e-18);
        assert!(cost_s(&ph, &p, 12.3 + umr(&p)).unwrap() < 1e-12);
        assert!((cost_complex(&ph, &p, 12.3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_direct_wrap_formula() {
        let p = plan(400e6, 1e6, vec![1, 3, 2, 5], C_EXACT);
        let noise = NoiseModel::phase_gaussian(0.4).unwrap();
        let ph = synth_phases(&p, 3.0, &noise, &StreamKey::new(5)).unwrap();
        for q in [-40.0, 0.0, 2.9, 3.0, 77.7] {
            let a = cost_s(&ph, &p, q).unwrap();
            assert!((a - slow_cost(&ph, &p, q)).abs() < 1e-9);
        }
    }

    #[test]
    fn practical_umr_cost_within_appendix_bound() {
        let n = 40;
        let p = plan(390.1e6, 1e6, vec![1; n - 1], C_EXACT);
        let ph = clean(&p, 0.0);
        let eps = crate::analysis::epsilon_of(&p);
        let ratio = p.f1() / p.bandwidth();
        let bound = 4.0 * n as f64 * std::f64::consts::PI.powi(2) * eps * eps / (ratio * ratio);
        let s = cost_s(&ph, &p, practical_umr(&p)).unwrap();
        assert!(s <= bound, "{s} > {bound}");
        assert!(s > 0.0);
    }

    #[test]
    fn cost_rejects_mismatch_and_single_frequency() {
        let p = plan(400e6, 1e6, vec![1, 1], C_EXACT);
        let short = PhaseVector::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(cost_s(&short, &p, 0.0), Err(Error::LengthMismatch { .. })));
        assert!(cost_complex(&short, &p, 0.0).is_err());
    }

    #[test]
    fn on_grid_recovery_is_exact() {
        let p = plan(400e6, 1e6, vec![1; 20], C_PAPER_REPRO);
        let cfg = EstimatorConfig::half_beat_window(&p, 0.01);
        for k in [0usize, 1234, 15000, 29999] {
            let q0 = cfg.grid_point(k);
            let est = ls_estimate(&clean(&p, q0), &p, &cfg).unwrap();
            assert_eq!(est.q_hat, q0);
            assert_eq!(est.grid_index, k);
            assert!(!est.refined);
        }
    }

    #[test]
    fn tie_breaks_toward_low_range() {
        let p = plan(400e6, 1e6, vec![1; 4], C_PAPER_REPRO);
        let cfg = EstimatorConfig::new(-10.0, 400.0, 0.125);
        let q0 = 5.0;
        let est = ls_estimate(&clean(&p, q0), &p, &cfg).unwrap();
        assert_eq!(est.q_hat, q0);
        let ph = clean(&p, q0);
        assert!(cost_s(&ph, &p, q0).unwrap() <= 1e-12);
        assert!(cost_s(&ph, &p, q0 + 300.0).unwrap() <= 1e-12);
    }

    #[test]
    fn grid_minimum_never_exceeds_snapped_truth() {
        let p = plan(400e6, 1e6, vec![2, 1, 3], C_EXACT);
        let cfg = EstimatorConfig::new(-50.0, 50.0, 0.01);
        for q0 in [1.23456, -7.777, 30.001] {
            let ph = clean(&p, q0);
            let est = ls_estimate(&ph, &p, &cfg).unwrap();
            let snapped = cfg.grid_point(((q0 - cfg.search_lo) / cfg.step).round() as usize);
            assert!(est.cost_at_min <= cost_s(&ph, &p, snapped).unwrap() + 1e-15);
        }
    }

    #[test]
    fn refinement_moves_toward_truth() {
        let p = plan(400e6, 1e6, vec![1; 20], C_EXACT);
        let cfg = EstimatorConfig::new(-10.0, 10.0, 0.01).with_refine(true);
        let q0 = 1.2345;
        let est = ls_estimate(&clean(&p, q0), &p, &cfg).unwrap();
        assert!(est.refined);
        assert!((est.q_hat - q0).abs() < 0.001, "{}", est.q_hat);
        let plain = ls_estimate(&clean(&p, q0), &p, &EstimatorConfig { refine: false, ..cfg }).unwrap();
        assert!((est.q_hat - q0).abs() < (plain.q_hat - q0).abs());
    }

    #[test]
    fn config_validation() {
        let p = plan(400e6, 1e6, vec![1; 3], C_EXACT);
        let ph = clean(&p, 0.0);
        for cfg in [
            EstimatorConfig::new(1.0, 1.0, 0.1),
            EstimatorConfig::new(0.0, 0.05, 0.1),
            EstimatorConfig::new(0.0, 1.0, 0.0),
            EstimatorConfig::new(0.0, f64::NAN, 0.1),
        ] {
            assert!(ls_estimate(&ph, &p, &cfg).is_err());
        }
        let cfg = EstimatorConfig::new(0.0, 1.0, 0.25);
        assert_eq!(cfg.grid_len(), 5);
        assert!(!EstimatorConfig::new(0.0, 1.0, 0.5).resolves(&p));
    }

    #[test]
    fn window_paper_protocol() {
        let p = plan(400e6, 1e6, vec![1; 20], C_PAPER_REPRO);
        let cfg = EstimatorConfig::half_beat_window(&p, 0.001);
        assert!((cfg.search_lo + 150.0).abs() < 1e-9 && (cfg.search_hi - 150.0).abs() < 1e-9);
    }

    #[test]
    fn surrogates_track_ls_argmin() {
        let p = plan(400e6, 1e6, vec![1; 19], C_EXACT);
        let cfg = EstimatorConfig::new(-20.0, 20.0, 0.02);
        let noise = NoiseModel::phase_gaussian(sigma_theta_from_snr_db(10.0)).unwrap();
        let root = StreamKey::new(77);
        let half_lobe = p.c() / (2.0 * p.bandwidth());
        for t in 0..100 {
            let ph = synth_phases(&p, 0.37, &noise, &root.child(t)).unwrap();
            let ls = ls_estimate(&ph, &p, &cfg).unwrap().grid_index;
            // the coherent sum keeps the carrier phase and shares the LS minimiser
            assert_eq!(cosine_grid_argmax(&ph, &p, &cfg).unwrap(), ls);
            // its magnitude drops the carrier and only locates the envelope peak
            let cx = complex_grid_argmax(&ph, &p, &cfg).unwrap();
            assert!((cfg.grid_point(cx) - cfg.grid_point(ls)).abs() < half_lobe);
        }
    }

    #[test]
    fn unwrap_ok_boundaries() {
        let p = plan(400e6, 1e6, vec![1; 4], C_EXACT);
        let lam = p.shortest_wavelength();
        assert!(unwrap_ok(3.0, 3.0, &p));
        assert!(!unwrap_ok(3.0 + umr(&p), 3.0, &p));
        assert!(unwrap_ok(lam, 0.0, &p));
        assert!(!unwrap_ok(lam * 1.0001, 0.0, &p));
    }

    #[test]
    fn cost_curves_report_both() {
        let p = plan(400e6, 1e6, vec![1; 4], C_EXACT);
        let ph = clean(&p, 1.0);
        let pts = cost_curves(&ph, &p, &[0.5, 1.0]).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[1].cost_s < pts[0].cost_s);
        assert!(pts[1].cost_complex > pts[0].cost_complex);
    }

    proptest! {
        #[test]
        fn cost_invariant_under_whole_turns(q in -100.0f64..100.0, shift in 0usize..4) {
            let p = plan(400e6, 1e6, vec![1, 2, 3, 4], C_EXACT);
            let noise = NoiseModel::phase_gaussian(0.3).unwrap();
            let ph = synth_phases(&p, 1.0, &noise, &StreamKey::new(3)).unwrap();
            let mut raw = ph.as_slice().to_vec();
            raw[shift] += TAU;
            let moved = PhaseVector::from_unwrapped(&raw).unwrap();
            let a = cost_s(&ph, &p, q).unwrap();
            let b = cost_s(&moved, &p, q).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn shift_equivariance(k0 in 0usize..2000, dk in 0usize..1000) {
            let p = plan(400e6, 1e6, vec![1, 2, 1, 3], C_PAPER_REPRO);
            let cfg = EstimatorConfig::new(-20.0, 20.0, 0.0078125);
            let base = ls_estimate(&clean(&p, cfg.grid_point(k0)), &p, &cfg).unwrap();
            let moved = ls_estimate(&clean(&p, cfg.grid_point(k0 + dk)), &p, &cfg).unwrap();
            prop_assert_eq!(moved.grid_index, base.grid_index + dk);
        }
    }
}
