//! Closed-form performance predictors for a frequency plan.
//!
//! Covers the unambiguous range and its epsilon-corrected practical value,
//! the ambiguity function and its sidelobe scan, the per-frequency range
//! PDFs, the moderate- and high-SNR mean squared errors, the CRB, and the
//! lower bound on the probability of confusing the true range with the
//! practical-UMR alias.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{sigma_theta_from_snr_db, wrap_cycles, FrequencyPlan};
use crate::primes::gcd;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Upper limit on sidelobe scan grid points.
pub const MAX_SCAN_POINTS: usize = 50_000_000;

/// Unambiguous measurement range c / (spacing GCD in Hz).
pub fn umr(plan: &FrequencyPlan) -> f64 {
    plan.c() / plan.gcd_hz()
}

/// Fractional offset of f1 against the spacing GCD, in (-0.5, 0.5].
pub fn epsilon_of(plan: &FrequencyPlan) -> f64 {
    let x = plan.f1() / plan.gcd_hz();
    let k1 = (x - 0.5).ceil();
    x - k1
}

/// Practical UMR: the UMR shifted by the epsilon-dependent location of the
/// near-zero local minimum of the noise-free cost.
pub fn practical_umr(plan: &FrequencyPlan) -> f64 {
    let f = plan.frequencies();
    let s1: f64 = f.iter().sum();
    let s2: f64 = f.iter().map(|x| x * x).sum();
    // sum(1/lambda) / sum(1/lambda^2) = c * sum(f) / sum(f^2)
    umr(plan) - epsilon_of(plan) * plan.c() * s1 / s2
}

/// Value of the P_a lower bound plus whether the inputs fall in the window
/// (f1/B >= 4, SNR > 0 dB) where the bound is stated to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaBound {
    pub value: f64,
    /// Natural log of the bound, finite even where `value` underflows to 0.
    pub ln_value: f64,
    pub applicable: bool,
}

/// ln(erfc(x) / 2), switching to the asymptotic series once erfc underflows.
fn ln_half_erfc(x: f64) -> f64 {
    if x < 25.0 {
        (0.5 * libm::erfc(x)).ln()
    } else {
        ln_half_erfc_asymptotic(x)
    }
}

fn ln_half_erfc_asymptotic(x: f64) -> f64 {
    let inv = 1.0 / (2.0 * x * x);
    let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv;
    -x * x - (x * PI.sqrt()).ln() + series.ln() - std::f64::consts::LN_2
}

/// Lower bound on P(S(q0 + practical UMR) < S(q0)) for Gaussian phase noise.
pub fn pa_lower_bound(f1: f64, bandwidth: f64, count: usize, epsilon: f64, snr_db: f64) -> PaBound {
    let sigma = sigma_theta_from_snr_db(snr_db);
    let w = TAU * epsilon.abs() * bandwidth / f1;
    let arg = (count as f64).sqrt() * w / (2.0 * std::f64::consts::SQRT_2 * sigma);
    PaBound {
        value: 0.5 * libm::erfc(arg),
        ln_value: ln_half_erfc(arg),
        applicable: f1 / bandwidth >= 4.0 && snr_db > 0.0,
    }
}

/// P_a under the unwrapped Gaussian approximation with the plan's exact
/// per-frequency offsets, before they are bounded by W.
pub fn pa_gaussian(plan: &FrequencyPlan, sigma_theta: f64) -> f64 {
    let eps = epsilon_of(plan);
    let f = plan.frequencies();
    let s1: f64 = f.iter().sum();
    let s2: f64 = f.iter().map(|x| x * x).sum();
    let ratio = s1 / s2;
    // w_i = 2 pi eps (lambda_i - ratio_len) / lambda_i = 2 pi eps (1 - f_i * s1 / s2)
    let w2: f64 = f
        .iter()
        .map(|fi| {
            let w = TAU * eps * (1.0 - fi * ratio);
            w * w
        })
        .sum();
    0.5 * libm::erfc(w2.sqrt() / (2.0 * std::f64::consts::SQRT_2 * sigma_theta))
}

/// Normalised ambiguity function |sum_i exp(j 2 pi f_i dq / c)|^2 / N^2.
pub fn ambiguity_fn(plan: &FrequencyPlan, dq: f64) -> f64 {
    // phases are taken relative to f1; the common factor drops out of |.|
    let step = plan.resolution() * dq / plan.c();
    let sum: Complex64 = plan
        .offsets_units()
        .into_iter()
        .map(|u| Complex64::from_polar(1.0, TAU * wrap_cycles(u as f64 * step)))
        .sum();
    let n = plan.len() as f64;
    sum.norm_sqr() / (n * n)
}

/// Null-to-null mainlobe width c / B.
pub fn default_mainlobe_width(plan: &FrequencyPlan) -> f64 {
    plan.c() / plan.bandwidth()
}

/// Scan step resolving carrier-period structure: lambda_N / 20.
pub fn default_scan_step(plan: &FrequencyPlan) -> f64 {
    plan.shortest_wavelength() / 20.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sidelobe {
    pub value: f64,
    pub location: f64,
}

/// Largest ambiguity-function value on the grid B_m/2 <= dq <= UMR - B_m/2.
///
/// Ties go to the lowest location, so the result does not depend on how the
/// grid is split between workers.
pub fn sidelobe_scan(plan: &FrequencyPlan, mainlobe_width: f64, step: f64) -> Result<Sidelobe> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("scan step must be positive, got {step}")));
    }
    if !mainlobe_width.is_finite() || mainlobe_width < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "mainlobe width must be non-negative, got {mainlobe_width}"
        )));
    }
    let lo = mainlobe_width / 2.0;
    let hi = umr(plan) - mainlobe_width / 2.0;
    if !(lo < hi) {
        return Err(Error::EmptyScan { lo, hi });
    }
    let count = ((hi - lo) / step).floor() as usize + 1;
    if count > MAX_SCAN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "sidelobe scan needs {count} points; increase the step"
        )));
    }
    let (value, index) = (0..count)
        .into_par_iter()
        .map(|k| (ambiguity_fn(plan, lo + k as f64 * step), k))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    Ok(Sidelobe {
        value,
        location: lo + index as f64 * step,
    })
}

/// MMSE denominator sum_k (b_k - mean b)^2 over the frequency offsets
/// b = [0, d_1, d_1 + d_2, ...] of an ordered spacing vector.
///
/// Equals d' G' (I - u u'/N) G d with G the lower-triangular ones matrix.
pub fn quadform(spacings: &[f64]) -> f64 {
    let n = spacings.len() + 1;
    let mut offsets = Vec::with_capacity(n);
    offsets.push(0.0);
    let mut acc = 0.0;
    for &d in spacings {
        acc += d;
        offsets.push(acc);
    }
    let mean = offsets.iter().sum::<f64>() / n as f64;
    offsets.iter().map(|b| (b - mean) * (b - mean)).sum()
}

/// The same quadratic form evaluated through the explicit matrix product.
pub fn quadform_matrix(spacings: &[f64]) -> f64 {
    let m = spacings.len();
    let n = (m + 1) as f64;
    // G' (I - u u'/N) G has entry (i, j) = (N - max(i, j)) * min(i, j) / N, 1-based
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            let (lo, hi) = if i < j { (i + 1, j + 1) } else { (j + 1, i + 1) };
            row += (n - hi as f64) * lo as f64 / n * spacings[j];
        }
        total += spacings[i] * row;
    }
    total
}

/// N times the quadratic form, exactly, for integer spacings.
pub fn quadform_units_scaled(spacings: &[u64]) -> i128 {
    let n = spacings.len() as i128 + 1;
    let mut acc: i128 = 0;
    let mut sum: i128 = 0;
    let mut sum_sq: i128 = 0;
    for &d in spacings {
        acc += d as i128;
        sum += acc;
        sum_sq += acc * acc;
    }
    n * sum_sq - sum * sum
}

/// sum_k (b_k - mean b)^2 over the partial sums b_k = g_1 + ... + g_k.
pub fn partial_sum_spread(sequence: &[f64]) -> f64 {
    if sequence.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    let sums: Vec<f64> = sequence
        .iter()
        .map(|g| {
            acc += g;
            acc
        })
        .collect();
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;
    sums.iter().map(|b| (b - mean) * (b - mean)).sum()
}

fn sum_sq_freq(plan: &FrequencyPlan) -> f64 {
    plan.frequencies().iter().map(|f| f * f).sum()
}

/// Moderate-SNR mean squared range error, m^2.
pub fn mmse(plan: &FrequencyPlan, sigma_theta: f64) -> f64 {
    let c = plan.c();
    (c * c * sigma_theta * sigma_theta) / (FOUR_PI_SQ * quadform(&plan.spacings_hz()))
}

/// High-SNR mean squared range error, m^2.
pub fn hmse(plan: &FrequencyPlan, sigma_theta: f64) -> f64 {
    let c = plan.c();
    (c * c * (sigma_theta * sigma_theta)) / (FOUR_PI_SQ * sum_sq_freq(plan))
}

/// Cramer-Rao bound for complex noise with std `sigma_n`, m^2.
pub fn crb(plan: &FrequencyPlan, sigma_n: f64) -> f64 {
    crb_from_variance(plan, sigma_n * sigma_n)
}

/// Cramer-Rao bound from the complex noise variance sigma_n^2.
///
/// With `noise_variance = 2 sigma_theta^2` this returns exactly
/// `hmse(plan, sigma_theta)`.
pub fn crb_from_variance(plan: &FrequencyPlan, noise_variance: f64) -> f64 {
    let c = plan.c();
    (c * c * noise_variance) / (2.0 * FOUR_PI_SQ * sum_sq_freq(plan))
}

/// Natural log of the single-frequency range PDF.
pub fn ln_pdf_single(f: f64, q: f64, q0: f64, sigma_theta: f64, c: f64) -> f64 {
    let lambda = c / f;
    let dq = q - q0;
    let r = dq - lambda * (dq / lambda).round();
    let sigma_q = c * sigma_theta / (TAU * f);
    -(TAU.sqrt() * sigma_q).ln() - r * r / (2.0 * sigma_q * sigma_q)
}

pub fn pdf_single(f: f64, q: f64, q0: f64, sigma_theta: f64, c: f64) -> f64 {
    ln_pdf_single(f, q, q0, sigma_theta, c).exp()
}

pub fn pdf_pair(f_a: f64, f_b: f64, q: f64, q0: f64, sigma_theta: f64, c: f64) -> f64 {
    (ln_pdf_single(f_a, q, q0, sigma_theta, c) + ln_pdf_single(f_b, q, q0, sigma_theta, c)).exp()
}

pub fn ln_pdf_multi(plan: &FrequencyPlan, q: f64, q0: f64, sigma_theta: f64) -> f64 {
    plan.frequencies()
        .into_iter()
        .map(|f| ln_pdf_single(f, q, q0, sigma_theta, plan.c()))
        .sum()
}

/// Joint PDF over all frequencies: the product of the single PDFs.
pub fn pdf_multi(plan: &FrequencyPlan, q: f64, q0: f64, sigma_theta: f64) -> f64 {
    ln_pdf_multi(plan, q, q0, sigma_theta).exp()
}

/// Joint PDF via the square root of the adjacent-pair products times the
/// closing (f_1, f_N) pair; each frequency appears exactly twice under the root.
pub fn pdf_multi_via_pairs(plan: &FrequencyPlan, q: f64, q0: f64, sigma_theta: f64) -> f64 {
    let f = plan.frequencies();
    let c = plan.c();
    let ln_pair = |a: f64, b: f64| {
        ln_pdf_single(a, q, q0, sigma_theta, c) + ln_pdf_single(b, q, q0, sigma_theta, c)
    };
    let adjacent: f64 = f.windows(2).map(|w| ln_pair(w[0], w[1])).sum();
    let closing = ln_pair(f[0], f[f.len() - 1]);
    (0.5 * (adjacent + closing)).exp()
}

/// A location below the UMR where the periodic peaks of two pair PDFs meet.
#[derive(Debug, Clone, PartialEq)]
pub struct Coincidence {
    pub spacing_a: usize,
    pub spacing_b: usize,
    pub multiple_a: u64,
    pub multiple_b: u64,
    pub dq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoprimeReport {
    pub coprime: bool,
    pub coincidences: Vec<Coincidence>,
}

/// Checks pairwise co-primality of the GCD-normalised spacings and lists every
/// peak coincidence k_a c/df_a = k_b c/df_b below the UMR.
pub fn coprime_check(plan: &FrequencyPlan) -> CoprimeReport {
    let g = plan.spacing_gcd();
    let norm: Vec<u64> = plan.spacings().iter().map(|&k| k / g).collect();
    let full = umr(plan);
    let mut coincidences = Vec::new();
    for a in 0..norm.len() {
        for b in a + 1..norm.len() {
            let shared = gcd(norm[a], norm[b]);
            // k_a / n_a = k_b / n_b < 1 forces k_a = m n_a / shared, 0 < m < shared
            for m in 1..shared {
                coincidences.push(Coincidence {
                    spacing_a: a,
                    spacing_b: b,
                    multiple_a: m * norm[a] / shared,
                    multiple_b: m * norm[b] / shared,
                    dq: full * m as f64 / shared as f64,
                });
            }
        }
    }
    CoprimeReport {
        coprime: coincidences.is_empty(),
        coincidences,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisOptions {
    pub mainlobe_width: Option<f64>,
    pub scan_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub sigma_theta: f64,
    pub umr: f64,
    pub practical_umr: f64,
    pub epsilon: f64,
    pub mmse: f64,
    pub hmse: f64,
    pub crb: f64,
    pub mainlobe_width: f64,
    pub scan_step: f64,
    pub max_sidelobe: Sidelobe,
    pub coprime: bool,
}

pub fn analyze(plan: &FrequencyPlan, sigma_theta: f64, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    if !(sigma_theta > 0.0) || !sigma_theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma_theta must be positive, got {sigma_theta}"
        )));
    }
    let mainlobe_width = opts.mainlobe_width.unwrap_or_else(|| default_mainlobe_width(plan));
    let scan_step = opts.scan_step.unwrap_or_else(|| default_scan_step(plan));
    Ok(AnalysisReport {
        sigma_theta,
        umr: umr(plan),
        practical_umr: practical_umr(plan),
        epsilon: epsilon_of(plan),
        mmse: mmse(plan, sigma_theta),
        hmse: hmse(plan, sigma_theta),
        crb: crb_from_variance(plan, 2.0 * (sigma_theta * sigma_theta)),
        mainlobe_width,
        scan_step,
        max_sidelobe: sidelobe_scan(plan, mainlobe_width, scan_step)?,
        coprime: coprime_check(plan).coprime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{C_EXACT, C_PAPER_REPRO};
    use proptest::prelude::*;

    fn plan(f1: f64, res: f64, sp: Vec<u64>, c: f64) -> FrequencyPlan {
        FrequencyPlan::new(f1, res, sp, c).unwrap()
    }

    #[test]
    fn umr_examples() {
        let rips = plan(400e6, 1e6, vec![1; 40], C_PAPER_REPRO);
        assert!((umr(&rips) - 300.0).abs() < 1e-9);
        let forced = plan(400e6, 1e6, vec![4, 6], C_PAPER_REPRO);
        assert!((umr(&forced) - 150.0).abs() < 1e-9);
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_of(&plan(400e6, 1e6, vec![1; 3], C_EXACT)), 0.0);
        assert!((epsilon_of(&plan(400.1e6, 1e6, vec![1; 3], C_EXACT)) - 0.1).abs() < 1e-9);
        assert_eq!(epsilon_of(&plan(105e6, 10e6, vec![1; 3], C_EXACT)), 0.5);
        let e = epsilon_of(&plan(104.9e6, 10e6, vec![1; 3], C_EXACT));
        assert!((e - 0.49).abs() < 1e-9);
        let e = epsilon_of(&plan(105.1e6, 10e6, vec![1; 3], C_EXACT));
        assert!((e + 0.49).abs() < 1e-9);
    }

    #[test]
    fn practical_umr_equals_umr_at_zero_epsilon() {
        let p = plan(400e6, 1e6, vec![1, 2, 3], C_EXACT);
        assert_eq!(practical_umr(&p), umr(&p));
    }

    #[test]
    fn pa_bound_paper_values() {
        let b5 = pa_lower_bound(10.0, 1.0, 40, 0.1, 5.0);
        let b10 = pa_lower_bound(10.0, 1.0, 40, 0.1, 10.0);
        assert!((b5.value - 0.308).abs() < 0.002, "{}", b5.value);
        assert!((b10.value - 0.187).abs() < 0.002, "{}", b10.value);
        assert!(b5.applicable && b10.applicable);
        assert!(pa_lower_bound(10.0, 1.0, 40, 0.1, 200.0).value < 1e-12);
        assert!(!pa_lower_bound(105e6, 400e6, 41, 0.5, 5.0).applicable);
        assert!(!pa_lower_bound(10.0, 1.0, 40, 0.1, -1.0).applicable);
        let tiny = pa_lower_bound(105e6, 400e6, 41, 0.5, 5.0);
        assert_eq!(tiny.value, 0.0);
        assert!(tiny.ln_value.is_finite() && tiny.ln_value < -1000.0);
    }

    #[test]
    fn ln_half_erfc_is_continuous_at_the_switch() {
        for x in [20.0, 25.0, 26.0] {
            let direct = (0.5 * libm::erfc(x)).ln();
            assert!((ln_half_erfc_asymptotic(x) - direct).abs() < 1e-9 * direct.abs());
        }
        for x in [0.0, 1.0, 5.0, 20.0] {
            assert!((ln_half_erfc(x) - (0.5 * libm::erfc(x)).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn pa_gaussian_dominates_bound() {
        let p = plan(390.1e6, 1e6, vec![1; 39], C_EXACT);
        let s = sigma_theta_from_snr_db(5.0);
        let b = pa_lower_bound(p.f1(), p.bandwidth(), p.len(), epsilon_of(&p), 5.0);
        assert!(pa_gaussian(&p, s) >= b.value);
    }

    #[test]
    fn ambiguity_examples() {
        let p = plan(400e6, 1e6, vec![1, 2, 4, 3], C_PAPER_REPRO);
        assert!((ambiguity_fn(&p, 0.0) - 1.0).abs() < 1e-15);
        assert!((ambiguity_fn(&p, umr(&p)) - 1.0).abs() < 1e-9);
        let two = plan(400e6, 1e6, vec![3], C_PAPER_REPRO);
        for dq in [0.3, 17.0, 41.5, 99.9] {
            let expect = (PI * 3e6 * dq / C_PAPER_REPRO).cos().powi(2);
            assert!((ambiguity_fn(&two, dq) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn ambiguity_exact_at_umr_with_offset_f1() {
        let p = plan(410e6, 65.0, vec![200 * 37, 200 * 41, 200 * 43], C_PAPER_REPRO);
        assert!((ambiguity_fn(&p, umr(&p)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sidelobe_uniform_matches_dirichlet() {
        let n = 21usize;
        let p = plan(400e6, 1e6, vec![1; n - 1], C_PAPER_REPRO);
        // the Dirichlet mainlobe spans +-c/(N df), wider than the c/B default
        let null = C_PAPER_REPRO / (n as f64 * 1e6);
        let s = sidelobe_scan(&p, 2.0 * null, 0.001).unwrap();
        let dirichlet = |dq: f64| {
            let x = PI * 1e6 * dq / C_PAPER_REPRO;
            let v = (n as f64 * x).sin() / (n as f64 * x.sin());
            v * v
        };
        let mut best = 0.0f64;
        let mut k = 0;
        while (k as f64) * 1e-4 < 30.0 {
            best = best.max(dirichlet(null + k as f64 * 1e-4));
            k += 1;
        }
        assert!((s.value - best).abs() < 1e-5, "{} vs {}", s.value, best);
        assert!((s.value - 0.0472).abs() < 1e-3, "{}", s.value);
        // C is symmetric about UMR/2, so the first sidelobe shows up at either end
        let near = s.location.min(umr(&p) - s.location);
        assert!(near > null && near < 2.0 * null, "{}", s.location);
    }

    #[test]
    fn sidelobe_two_frequencies_hits_envelope_boundary() {
        // N = 2: C = cos^2(pi df dq / c) is maximal at the window edges
        let p = plan(400e6, 1e6, vec![5], C_PAPER_REPRO);
        let bm = 10.0;
        let s = sidelobe_scan(&p, bm, 0.01).unwrap();
        let expect = (PI * 5e6 * (bm / 2.0) / C_PAPER_REPRO).cos().powi(2);
        assert!((s.value - expect).abs() < 1e-9);
        assert!((s.location - bm / 2.0).abs() < 1e-9);
    }

    #[test]
    fn sidelobe_two_frequencies_alias_inside_window() {
        // spacing 2 df with UMR c/df: the pair's own grating peak sits at UMR/2
        let p = plan(400e6, 1e6, vec![2, 1], C_PAPER_REPRO);
        let bare = plan(400e6, 1e6, vec![2], C_PAPER_REPRO);
        assert!((ambiguity_fn(&bare, 150.0) - 1.0).abs() < 1e-9);
        let s = sidelobe_scan(&p, 10.0, 0.5).unwrap();
        assert!(s.value > 0.0 && s.value < 1.0);
    }

    #[test]
    fn sidelobe_errors() {
        let p = plan(400e6, 1e6, vec![1, 1], C_PAPER_REPRO);
        assert!(matches!(sidelobe_scan(&p, 400.0, 0.1), Err(Error::EmptyScan { .. })));
        assert!(sidelobe_scan(&p, 1.0, 0.0).is_err());
    }

    #[test]
    fn quadform_examples() {
        let d = 3.0;
        assert!((quadform(&[d, d]) - 2.0 * d * d).abs() < 1e-12);
        for n in [2usize, 5, 21, 41] {
            let v = vec![d; n - 1];
            let expect = d * d * (n * (n * n - 1)) as f64 / 12.0;
            assert!((quadform(&v) - expect).abs() <= 1e-9 * expect);
        }
        assert!(quadform(&[1.0, 2.0]) < quadform(&[2.0, 3.0]));
    }

    #[test]
    fn quadform_scaled_integer_matches_float() {
        let v = [2u64, 7, 1, 8];
        let exact = quadform_units_scaled(&v) as f64 / 5.0;
        let fl = quadform(&[2.0, 7.0, 1.0, 8.0]);
        assert!((exact - fl).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn quadform_paths_agree(v in proptest::collection::vec(1.0f64..1e6, 1..60)) {
            let a = quadform(&v);
            let b = quadform_matrix(&v);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn left_shift_identity(v in proptest::collection::vec(0.1f64..100.0, 2..40)) {
            let full = partial_sum_spread(&v);
            let shifted = quadform(&v[1..]);
            prop_assert!((full - shifted).abs() <= 1e-9 * full.abs().max(1.0));
        }
    }

    #[test]
    fn mmse_examples() {
        let n = 21usize;
        let b = 20e6;
        let p = plan(400e6, 1e6, vec![1; n - 1], C_PAPER_REPRO);
        let s = 0.1;
        let c = C_PAPER_REPRO;
        let closed = c * c * 12.0 * s * s * (n as f64 - 1.0)
            / (4.0 * PI * PI * b * b * n as f64 * (n as f64 + 1.0));
        assert!((mmse(&p, s) - closed).abs() <= 1e-9 * closed);
        assert!((mmse(&p, 2.0 * s) / mmse(&p, s) - 4.0).abs() < 1e-12);
        let best = plan(400e6, 1e6, vec![1, 3, 5, 4, 2], C_EXACT);
        let worst = plan(400e6, 1e6, vec![5, 3, 1, 2, 4], C_EXACT);
        assert!(mmse(&best, s) < mmse(&worst, s));
    }

    #[test]
    fn hmse_crb_examples() {
        let single_like = plan(400e6, 1e6, vec![1], C_EXACT);
        let s = 0.05;
        assert_eq!(hmse(&single_like, s), crb_from_variance(&single_like, 2.0 * (s * s)));
        let rel = (hmse(&single_like, s) - crb(&single_like, 2f64.sqrt() * s)).abs() / hmse(&single_like, s);
        assert!(rel < 1e-15);
        // one frequency: std c sigma / (2 pi f); two near-equal ones halve the variance
        let sigma_q = C_EXACT * s / (TAU * 400e6);
        let h = hmse(&plan(400e6, 1e-3, vec![1], C_EXACT), s);
        assert!((h - sigma_q * sigma_q / 2.0).abs() < 1e-9 * h);
    }

    #[test]
    fn pdf_single_peaks_at_truth() {
        let f = 20e6;
        let top = pdf_single(f, 3.0, 3.0, 0.3, C_EXACT);
        for q in [2.0, 2.9, 3.1, 5.0, 10.0] {
            assert!(pdf_single(f, q, 3.0, 0.3, C_EXACT) < top);
        }
        let sigma_q = C_EXACT * 0.3 / (TAU * f);
        assert!((top - 1.0 / (TAU.sqrt() * sigma_q)).abs() < 1e-12 * top);
    }

    #[test]
    fn pdf_pair_is_periodic_in_beat_wavelength() {
        let (fa, fb) = (400e6, 401e6);
        let c = C_PAPER_REPRO;
        let period = c / (fb - fa);
        for q in [0.0, 0.2, 0.37, 1.1] {
            let a = pdf_pair(fa, fb, q, 0.0, 0.2, c);
            let b = pdf_pair(fa, fb, q + period, 0.0, 0.2, c);
            assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn pdf_root_identity() {
        let p = plan(400e6, 1e6, vec![2, 3, 5, 7], C_EXACT);
        for q in [0.0, 0.05, 0.3, 12.0] {
            let a = pdf_multi(&p, q, 0.0, 0.4);
            let b = pdf_multi_via_pairs(&p, q, 0.0, 0.4);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn coprime_examples() {
        let primes = plan(400e6, 1e6, vec![2, 3, 5], C_EXACT);
        assert_eq!(coprime_check(&primes), CoprimeReport { coprime: true, coincidences: vec![] });
        let single = plan(400e6, 1e6, vec![6], C_EXACT);
        assert!(coprime_check(&single).coprime);
        // 2 and 4 share a factor while the plan GCD stays 1
        let shared = plan(400e6, 1e6, vec![2, 4, 5], C_PAPER_REPRO);
        let rep = coprime_check(&shared);
        assert!(!rep.coprime);
        assert_eq!(rep.coincidences.len(), 1);
        let hit = &rep.coincidences[0];
        assert_eq!((hit.spacing_a, hit.spacing_b, hit.multiple_a, hit.multiple_b), (0, 1, 1, 2));
        assert!((hit.dq - C_PAPER_REPRO / 2e6).abs() < 1e-9);
    }

    #[test]
    fn coprime_enumeration_matches_brute_force() {
        let sp = vec![6u64, 4, 9, 10, 15];
        let p = plan(400e6, 1.0, sp.clone(), C_EXACT);
        let mut brute = 0;
        for a in 0..sp.len() {
            for b in a + 1..sp.len() {
                for ka in 1..sp[a] {
                    for kb in 1..sp[b] {
                        if ka * sp[b] == kb * sp[a] {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(coprime_check(&p).coincidences.len(), brute);
    }

    #[test]
    fn analysis_report_invariants() {
        let p = plan(400.1e6, 1e6, vec![1, 3, 5, 4, 2], C_PAPER_REPRO);
        let r = analyze(&p, 0.1, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.hmse, r.crb);
        assert!(r.practical_umr <= r.umr);
        assert!((0.0..=1.0).contains(&r.max_sidelobe.value));
        assert!(r.mmse >= r.hmse);
        assert!(analyze(&p, 0.0, &AnalysisOptions::default()).is_err());
    }
}
