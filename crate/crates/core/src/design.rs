//! Frequency-plan designers and spacing arrangements.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::model::FrequencyPlan;
use crate::primes::prime_pool;
use crate::rng::StreamKey;

const GRID_TOL: f64 = 1e-9;

/// Inputs of the prime-based designers: bandwidth budget `bandwidth` (Hz),
/// frequency count, grid resolution (Hz), 1-based start index into the
/// primes, an optional fixed common factor K and an optional UMR floor (m).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub bandwidth: f64,
    pub count: usize,
    pub resolution: f64,
    pub prime_index: usize,
    pub k: Option<u64>,
    pub umr_requirement: Option<f64>,
}

impl DesignParams {
    pub fn new(bandwidth: f64, count: usize, resolution: f64, prime_index: usize) -> Self {
        Self {
            bandwidth,
            count,
            resolution,
            prime_index,
            k: None,
            umr_requirement: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bandwidth.is_finite() || !self.resolution.is_finite() {
            return Err(Error::NonFinite("design parameter"));
        }
        if self.bandwidth <= 0.0 {
            return Err(Error::InvalidArgument("bandwidth must be positive".into()));
        }
        if self.resolution <= 0.0 {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        if self.count < 2 {
            return Err(Error::InvalidArgument("at least two frequencies are required".into()));
        }
        if self.prime_index == 0 {
            return Err(Error::InvalidArgument("prime index is 1-based".into()));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if let Some(r) = self.umr_requirement {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::InvalidArgument("UMR requirement must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Ascending list of positive integer spacings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacingMultiset(Vec<u64>);

impl SpacingMultiset {
    /// Sorts the input; rejects empty lists and zero entries.
    pub fn new(mut values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty spacing multiset".into()));
        }
        if values.contains(&0) {
            return Err(Error::InvalidArgument("spacings must be positive".into()));
        }
        values.sort_unstable();
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// Which of the two maximising families `permute_min_error_with` emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MinErrorFamily {
    /// Odd-ranked entries ascending, then even-ranked entries descending.
    #[default]
    Canonical,
    /// Mirror image of the canonical arrangement.
    Mirrored,
}

/// Arrangement maximising the MMSE quadratic form: [a1, a3, a5, ..., a4, a2].
pub fn permute_min_error(sorted: &SpacingMultiset) -> Vec<u64> {
    permute_min_error_with(sorted, MinErrorFamily::Canonical)
}

pub fn permute_min_error_with(sorted: &SpacingMultiset, family: MinErrorFamily) -> Vec<u64> {
    let a = sorted.as_slice();
    let mut out: Vec<u64> = a.iter().step_by(2).copied().collect();
    out.extend(a.iter().skip(1).step_by(2).rev());
    if family == MinErrorFamily::Mirrored {
        out.reverse();
    }
    out
}

/// The dual arrangement: odd-ranked entries descending, then even-ranked ascending.
pub fn permute_max_error(sorted: &SpacingMultiset) -> Vec<u64> {
    let a = sorted.as_slice();
    let mut out: Vec<u64> = a.iter().step_by(2).rev().copied().collect();
    out.extend(a.iter().skip(1).step_by(2));
    out
}

/// `value / unit` as an integer, accepting values within 1e-9 relative of a
/// whole number.
fn grid_units(value: f64, unit: f64) -> Option<u64> {
    let ratio = value / unit;
    let r = ratio.round();
    ((ratio - r).abs() <= GRID_TOL * r.max(1.0) && r >= 1.0).then_some(r as u64)
}

/// Whole grid cells in `value`, rounding near-integers instead of flooring them away.
fn floor_units(value: f64, unit: f64) -> u64 {
    grid_units(value, unit).unwrap_or_else(|| (value / unit).floor().max(0.0) as u64)
}

fn check_common(f1: f64, bandwidth: f64, count: usize) -> Result<()> {
    if !f1.is_finite() || !bandwidth.is_finite() {
        return Err(Error::NonFinite("design parameter"));
    }
    if f1 <= 0.0 || bandwidth <= 0.0 {
        return Err(Error::InvalidArgument("f1 and bandwidth must be positive".into()));
    }
    if count < 2 {
        return Err(Error::InvalidArgument("at least two frequencies are required".into()));
    }
    Ok(())
}

/// Uniform spacing B/(N-1). The grid resolution defaults to that spacing.
pub fn design_rips(f1: f64, bandwidth: f64, count: usize, resolution: Option<f64>, c: f64) -> Result<FrequencyPlan> {
    check_common(f1, bandwidth, count)?;
    let step = bandwidth / (count - 1) as f64;
    let resolution = resolution.unwrap_or(step);
    let units = grid_units(step, resolution).ok_or_else(|| {
        Error::Infeasible(format!(
            "spacing {step} Hz is not a whole multiple of the {resolution} Hz resolution"
        ))
    })?;
    FrequencyPlan::new(f1, resolution, vec![units; count - 1], c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TowersDesign {
    pub plan: FrequencyPlan,
    /// Unsnapped geometric frequencies, Hz.
    pub ideal: Vec<f64>,
    /// Largest |snapped - ideal| over all frequencies, Hz.
    pub max_snap_error: f64,
}

/// Geometric plan f_i = fN - fN (B/fN)^i, i = 1..N-1, plus fN, snapped to a
/// grid of `resolution` anchored at f1 = fN - B.
pub fn design_towers(f_top: f64, bandwidth: f64, count: usize, resolution: f64, c: f64) -> Result<TowersDesign> {
    check_common(f_top, bandwidth, count)?;
    if !(f_top > bandwidth) {
        return Err(Error::InvalidArgument("towers design needs fN > B".into()));
    }
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let ratio = bandwidth / f_top;
    let mut ideal: Vec<f64> = (1..count as i32).map(|i| f_top - f_top * ratio.powi(i)).collect();
    ideal.push(f_top);
    let f1 = f_top - bandwidth;
    let offsets: Vec<u64> = ideal.iter().map(|f| ((f - f1) / resolution).round() as u64).collect();
    let mut spacings = Vec::with_capacity(count - 1);
    for (i, w) in offsets.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::Infeasible(format!(
                "frequencies {} and {} collide on the {resolution} Hz grid",
                i + 1,
                i + 2
            )));
        }
        spacings.push(w[1] - w[0]);
    }
    let plan = FrequencyPlan::new(f1, resolution, spacings, c)?;
    let max_snap_error = plan
        .frequencies()
        .iter()
        .zip(&ideal)
        .map(|(s, t)| (s - t).abs())
        .fold(0.0, f64::max);
    Ok(TowersDesign {
        plan,
        ideal,
        max_snap_error,
    })
}

/// Unit spacings at both ends with the single remaining gap in the middle.
pub fn design_constrained_optimal(f1: f64, bandwidth: f64, count: usize, resolution: f64, c: f64) -> Result<FrequencyPlan> {
    check_common(f1, bandwidth, count)?;
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let m = floor_units(bandwidth, resolution);
    let n = count as u64;
    if m < n - 1 {
        return Err(Error::Infeasible(format!(
            "{m} grid cells cannot hold {} spacings",
            n - 1
        )));
    }
    let mut sorted = vec![1u64; count - 2];
    sorted.push(m + 2 - n);
    FrequencyPlan::new(f1, resolution, permute_min_error(&SpacingMultiset::new(sorted)?), c)
}

/// Output of the prime window search.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeSelection {
    pub primes: Vec<u64>,
    pub k: u64,
    /// 1-based index of the first selected prime after any UMR-driven increments.
    pub prime_index: usize,
}

/// Picks N-1 consecutive primes from index i and the largest common factor K
/// fitting the bandwidth, advancing i while c/(K res) does not exceed the
/// UMR requirement.
pub fn prime_window_select(params: &DesignParams, c: f64) -> Result<PrimeSelection> {
    params.validate()?;
    let window = params.count - 1;
    let cells = floor_units(params.bandwidth, params.resolution);
    let mut index = params.prime_index;
    loop {
        let needed = index + window - 1;
        let pool = prime_pool(needed)?;
        let primes = pool[index - 1..needed].to_vec();
        let sum: u64 = primes.iter().sum();
        let fit = cells / sum;
        let k = match params.k {
            Some(k) if k <= fit => k,
            Some(k) => {
                return Err(Error::Infeasible(format!(
                    "K = {k} needs {} grid cells but the bandwidth holds {cells}",
                    k * sum
                )))
            }
            None => fit,
        };
        if k == 0 {
            return Err(Error::Infeasible(format!(
                "prime window starting at index {index} sums to {sum} cells, more than the {cells} available"
            )));
        }
        match params.umr_requirement {
            Some(req) if !(c / (k as f64 * params.resolution) > req) => index += 1,
            _ => {
                return Ok(PrimeSelection {
                    primes,
                    k,
                    prime_index: index,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimeDesign {
    pub plan: FrequencyPlan,
    pub selection: PrimeSelection,
}

fn prime_design(params: &DesignParams, f1: f64, c: f64, arrange: fn(&SpacingMultiset) -> Vec<u64>) -> Result<PrimeDesign> {
    let selection = prime_window_select(params, c)?;
    let order = arrange(&SpacingMultiset::new(selection.primes.clone())?);
    let spacings = order.into_iter().map(|p| p * selection.k).collect();
    Ok(PrimeDesign {
        plan: FrequencyPlan::new(f1, params.resolution, spacings, c)?,
        selection,
    })
}

pub fn design_prime_min_error(params: &DesignParams, f1: f64, c: f64) -> Result<PrimeDesign> {
    prime_design(params, f1, c, permute_min_error)
}

pub fn design_prime_max_error(params: &DesignParams, f1: f64, c: f64) -> Result<PrimeDesign> {
    prime_design(params, f1, c, permute_max_error)
}

/// N-1 spacings drawn uniformly from all positive grid compositions whose
/// sum fits in the bandwidth.
pub fn design_random(f1: f64, bandwidth: f64, count: usize, resolution: f64, c: f64, stream: &StreamKey) -> Result<FrequencyPlan> {
    check_common(f1, bandwidth, count)?;
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let m = floor_units(bandwidth, resolution);
    if m < (count - 1) as u64 {
        return Err(Error::Infeasible(format!(
            "{m} grid cells cannot hold {} spacings",
            count - 1
        )));
    }
    let cells = usize::try_from(m)
        .map_err(|_| Error::InvalidArgument("bandwidth spans too many grid cells".into()))?;
    // distinct partial sums in 1..=M are in bijection with such compositions
    let mut rng = stream.rng();
    let mut cuts: Vec<u64> = sample(&mut rng, cells, count - 1)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let spacings = cuts
        .into_iter()
        .map(|x| {
            let d = x - prev;
            prev = x;
            d
        })
        .collect();
    FrequencyPlan::new(f1, resolution, spacings, c)
}
