//! Frequency plans, wrapped phases, and the phase noise model.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::primes::gcd_all;
use crate::rng::StreamKey;

/// Speed of light in vacuum, m/s.
pub const C_EXACT: f64 = 299_792_458.0;

/// Rounded propagation speed under which the published numeric examples
/// (300 m, 23193 m, 23.077 km) reproduce.
pub const C_PAPER_REPRO: f64 = 3.0e8;

/// Which propagation speed a plan carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum CMode {
    #[default]
    Exact,
    PaperRepro,
}

impl CMode {
    pub fn speed(self) -> f64 {
        match self {
            CMode::Exact => C_EXACT,
            CMode::PaperRepro => C_PAPER_REPRO,
        }
    }

    /// Recovers the mode from a speed value, if it is one of the two constants.
    pub fn from_speed(c: f64) -> Option<Self> {
        if c == C_EXACT {
            Some(CMode::Exact)
        } else if c == C_PAPER_REPRO {
            Some(CMode::PaperRepro)
        } else {
            None
        }
    }
}

impl fmt::Display for CMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CMode::Exact => "exact",
            CMode::PaperRepro => "paper-repro",
        })
    }
}

impl FromStr for CMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CMode::Exact),
            "paper-repro" => Ok(CMode::PaperRepro),
            other => Err(Error::InvalidArgument(format!(
                "unknown c-mode '{other}' (expected exact or paper-repro)"
            ))),
        }
    }
}

/// Reduces `x` to the half-open interval (-pi, pi].
pub fn wrap_phase(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("phase"));
    }
    Ok(wrap(x))
}

#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    let mut r = x - TAU * ((x - PI) / TAU).ceil();
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Fractional part of `x` in [-0.5, 0.5]; used for phases measured in cycles.
#[inline]
pub(crate) fn wrap_cycles(x: f64) -> f64 {
    x - x.round()
}

/// A set of measurement frequencies on an integer grid.
///
/// Frequency `i` is `f1 + resolution * (k_1 + ... + k_{i-1})` where the `k`
/// are the integer spacings. Keeping the spacings integral makes GCD and
/// prime structure exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPlan {
    f1: f64,
    resolution: f64,
    spacings: Vec<u64>,
    c: f64,
}

impl FrequencyPlan {
    pub fn new(f1: f64, resolution: f64, spacings: Vec<u64>, c: f64) -> Result<Self> {
        if !f1.is_finite() || !resolution.is_finite() || !c.is_finite() {
            return Err(Error::NonFinite("plan parameter"));
        }
        if f1 <= 0.0 {
            return Err(Error::InvalidPlan(format!("f1 must be positive, got {f1}")));
        }
        if resolution <= 0.0 {
            return Err(Error::InvalidPlan(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if c <= 0.0 {
            return Err(Error::InvalidPlan(format!("c must be positive, got {c}")));
        }
        if spacings.is_empty() {
            return Err(Error::InvalidPlan(
                "at least one spacing (two frequencies) is required".into(),
            ));
        }
        if let Some(pos) = spacings.iter().position(|&k| k == 0) {
            return Err(Error::InvalidPlan(format!("spacing {pos} is zero")));
        }
        let total = spacings
            .iter()
            .try_fold(0u64, |acc, &k| acc.checked_add(k))
            .ok_or_else(|| Error::InvalidPlan("spacing sum overflows".into()))?;
        let top = f1 + resolution * total as f64;
        if !top.is_finite() {
            return Err(Error::NonFinite("highest frequency"));
        }
        Ok(Self {
            f1,
            resolution,
            spacings,
            c,
        })
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Spacings in grid units.
    pub fn spacings(&self) -> &[u64] {
        &self.spacings
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Same plan under a different propagation speed.
    pub fn with_c(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidPlan(format!("c must be positive, got {c}")));
        }
        self.c = c;
        Ok(self)
    }

    /// Number of frequencies N.
    pub fn len(&self) -> usize {
        self.spacings.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid offsets of each frequency from `f1`, starting at 0.
    pub fn offsets_units(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0u64;
        out.push(0);
        for &k in &self.spacings {
            acc += k;
            out.push(acc);
        }
        out
    }

    pub fn total_units(&self) -> u64 {
        self.spacings.iter().sum()
    }

    /// Occupied bandwidth f_N - f_1 in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.resolution * self.total_units() as f64
    }

    /// Ascending measurement frequencies in Hz.
    pub fn frequencies(&self) -> Vec<f64> {
        self.offsets_units()
            .into_iter()
            .map(|u| self.f1 + self.resolution * u as f64)
            .collect()
    }

    pub fn spacings_hz(&self) -> Vec<f64> {
        self.spacings
            .iter()
            .map(|&k| k as f64 * self.resolution)
            .collect()
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        self.frequencies().into_iter().map(|f| self.c / f).collect()
    }

    /// Shortest wavelength c / f_N.
    pub fn shortest_wavelength(&self) -> f64 {
        self.c / (self.f1 + self.bandwidth())
    }

    /// Exact integer GCD of the spacings, in grid units.
    pub fn spacing_gcd(&self) -> u64 {
        gcd_all(&self.spacings)
    }

    /// GCD of the spacings in Hz.
    pub fn gcd_hz(&self) -> f64 {
        self.spacing_gcd() as f64 * self.resolution
    }
}

/// Wrapped phase observations, one per plan frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    phases: Vec<f64>,
}

impl PhaseVector {
    /// Accepts phases that are already wrapped to (-pi, pi].
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        for (index, &value) in phases.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("phase"));
            }
            if value <= -PI || value > PI {
                return Err(Error::UnwrappedPhase { index, value });
            }
        }
        Ok(Self { phases })
    }

    /// Wraps arbitrary finite phases into (-pi, pi].
    pub fn from_unwrapped(raw: &[f64]) -> Result<Self> {
        let phases = raw.iter().map(|&x| wrap_phase(x)).collect::<Result<_>>()?;
        Ok(Self { phases })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn check_against(&self, plan: &FrequencyPlan) -> Result<()> {
        if self.phases.len() != plan.len() {
            return Err(Error::LengthMismatch {
                expected: plan.len(),
                got: self.phases.len(),
            });
        }
        Ok(())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.phases
    }
}

/// How phase errors are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    /// i.i.d. zero-mean Gaussian phase error with std sigma_theta.
    PhaseGaussian,
    /// Phase of a unit phasor plus circular complex Gaussian noise of
    /// variance 2 sigma_theta^2.
    ComplexAwgn,
    None,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::PhaseGaussian => "phase-gaussian",
            NoiseKind::ComplexAwgn => "complex-awgn",
            NoiseKind::None => "none",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase-gaussian" => Ok(NoiseKind::PhaseGaussian),
            "complex-awgn" => Ok(NoiseKind::ComplexAwgn),
            "none" => Ok(NoiseKind::None),
            other => Err(Error::InvalidNoise(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Noise level, given either directly or through the SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    SigmaTheta(f64),
    SnrDb(f64),
}

/// Phase std for a given SNR under SNR = 1 / (2 sigma_theta^2).
pub fn sigma_theta_from_snr_db(snr_db: f64) -> f64 {
    (10f64.powf(-snr_db / 10.0) / 2.0).sqrt()
}

pub fn snr_db_from_sigma_theta(sigma_theta: f64) -> f64 {
    -10.0 * (2.0 * sigma_theta * sigma_theta).log10()
}

/// Complex noise std under the alternative convention SNR = 1 / sigma^2.
pub fn sigma_n_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma_theta: f64,
    bias: Option<Vec<f64>>,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, level: NoiseLevel) -> Result<Self> {
        let sigma_theta = match level {
            NoiseLevel::SigmaTheta(s) => s,
            NoiseLevel::SnrDb(db) => {
                if !db.is_finite() {
                    return Err(Error::NonFinite("snr_db"));
                }
                sigma_theta_from_snr_db(db)
            }
        };
        if !sigma_theta.is_finite() || sigma_theta < 0.0 {
            return Err(Error::InvalidNoise(format!(
                "sigma_theta must be finite and non-negative, got {sigma_theta}"
            )));
        }
        Ok(Self {
            kind,
            sigma_theta,
            bias: None,
        })
    }

    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            sigma_theta: 0.0,
            bias: None,
        }
    }

    pub fn phase_gaussian(sigma_theta: f64) -> Result<Self> {
        Self::new(NoiseKind::PhaseGaussian, NoiseLevel::SigmaTheta(sigma_theta))
    }

    pub fn complex_awgn(sigma_theta: f64) -> Result<Self> {
        Self::new(NoiseKind::ComplexAwgn, NoiseLevel::SigmaTheta(sigma_theta))
    }

    /// Adds a fixed per-frequency phase bias (radians).
    pub fn with_bias(mut self, bias: Vec<f64>) -> Result<Self> {
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("bias"));
        }
        self.bias = Some(bias);
        Ok(self)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma_theta(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            _ => self.sigma_theta,
        }
    }

    pub fn snr_db(&self) -> f64 {
        snr_db_from_sigma_theta(self.sigma_theta())
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }
}

/// Noise-free phase 2 pi q f / c, reduced in cycles before scaling so that
/// long ranges do not lose precision.
#[inline]
pub(crate) fn ideal_phase(q: f64, f: f64, c: f64) -> f64 {
    TAU * wrap_cycles(q * f / c)
}

/// Synthesises wrapped phases for range `q0` under `noise`.
///
/// The draw for frequency `i` comes from `stream.child(i)`, so individual
/// frequencies can be regenerated independently.
pub fn synth_phases(
    plan: &FrequencyPlan,
    q0: f64,
    noise: &NoiseModel,
    stream: &StreamKey,
) -> Result<PhaseVector> {
    if !q0.is_finite() {
        return Err(Error::NonFinite("q0"));
    }
    if let Some(bias) = noise.bias() {
        if bias.len() != plan.len() {
            return Err(Error::LengthMismatch {
                expected: plan.len(),
                got: bias.len(),
            });
        }
    }
    let sigma = noise.sigma_theta();
    let c = plan.c();
    let phases = plan
        .frequencies()
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let ideal = ideal_phase(q0, f, c);
            let bias = noise.bias().map_or(0.0, |b| b[i]);
            let noisy = match noise.kind() {
                NoiseKind::None => ideal,
                NoiseKind::PhaseGaussian => {
                    let mut rng = stream.child(i as u64).rng();
                    let z: f64 = StandardNormal.sample(&mut rng);
                    ideal + sigma * z
                }
                NoiseKind::ComplexAwgn => {
                    let mut rng = stream.child(i as u64).rng();
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let y = Complex64::from_polar(1.0, ideal) + Complex64::new(sigma * re, sigma * im);
                    y.arg()
                }
            };
            wrap(noisy + bias)
        })
        .collect();
    Ok(PhaseVector { phases })
}
