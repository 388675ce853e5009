//! Phase record files.
//!
//! ```text
//! # f1_hz=410000000
//! # resolution_hz=65
//! # spacings=7400,8200,8600
//! # c_mode=paper-repro
//! experiment_id,freq_hz,phase_rad,q0_m
//! e1,410000000,1.234,19.19
//! ```
//!
//! The column header line is optional, as is the `q0_m` column. Rows of one
//! experiment may come in any order but must cover every plan frequency once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use mfi_core::{synth_phases, CMode, FrequencyPlan, NoiseModel, PhaseVector, StreamKey};

use crate::error::{CliError, Result};
use crate::output::format_float;

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub id: String,
    pub phases: PhaseVector,
    pub q0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub plan: FrequencyPlan,
    pub c_mode: CMode,
    /// In first-appearance order.
    pub experiments: Vec<Experiment>,
}

fn header_value<'a>(headers: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    headers
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| CliError::Record(format!("missing header '{key}'")))
}

fn number<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Record(format!("bad {what} '{}'", text.trim())))
}

impl PhaseRecord {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut headers = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.split_once('=') {
                    headers.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                body.push_str(line);
                body.push('\n');
            }
        }
        let c_mode: CMode = header_value(&headers, "c_mode")?
            .parse()
            .map_err(|e: mfi_core::Error| CliError::Record(e.to_string()))?;
        let spacings = header_value(&headers, "spacings")?
            .split(',')
            .map(|s| number::<u64>(s, "spacing"))
            .collect::<Result<Vec<_>>>()?;
        let plan = FrequencyPlan::new(
            number(header_value(&headers, "f1_hz")?, "f1_hz")?,
            number(header_value(&headers, "resolution_hz")?, "resolution_hz")?,
            spacings,
            c_mode.speed(),
        )?;
        let freqs = plan.frequencies();
        let tolerance = plan.resolution() / 2.0;

        let mut order: Vec<String> = Vec::new();
        let mut slots: BTreeMap<String, (Vec<Option<f64>>, Option<f64>)> = BTreeMap::new();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        for (line, row) in reader.records().enumerate() {
            let row = row.map_err(|e| CliError::Record(e.to_string()))?;
            if line == 0 && row.get(0) == Some("experiment_id") {
                continue;
            }
            if row.len() < 3 || row.len() > 4 {
                return Err(CliError::Record(format!("row {} has {} fields", line + 1, row.len())));
            }
            let id = row[0].to_string();
            let f: f64 = number(&row[1], "freq_hz")?;
            let phase: f64 = number(&row[2], "phase_rad")?;
            let q0 = match row.get(3) {
                Some(s) if !s.is_empty() => Some(number::<f64>(s, "q0_m")?),
                _ => None,
            };
            let index = freqs
                .iter()
                .position(|g| (g - f).abs() <= tolerance)
                .ok_or_else(|| CliError::Record(format!("experiment {id}: frequency {f} Hz is not in the plan")))?;
            let entry = slots.entry(id.clone()).or_insert_with(|| {
                order.push(id.clone());
                (vec![None; freqs.len()], None)
            });
            if entry.0[index].replace(phase).is_some() {
                return Err(CliError::Record(format!("experiment {id}: frequency {f} Hz appears twice")));
            }
            match (entry.1, q0) {
                (Some(a), Some(b)) if a != b => {
                    return Err(CliError::Record(format!("experiment {id}: inconsistent q0_m")));
                }
                (None, Some(b)) => entry.1 = Some(b),
                _ => {}
            }
        }
        let mut experiments = Vec::with_capacity(order.len());
        for id in order {
            let (values, q0) = slots.remove(&id).expect("recorded id");
            let missing = values.iter().filter(|v| v.is_none()).count();
            if missing > 0 {
                return Err(CliError::Record(format!(
                    "experiment {id}: {missing} of {} frequencies missing",
                    freqs.len()
                )));
            }
            let phases = PhaseVector::new(values.into_iter().map(|v| v.expect("checked")).collect())
                .map_err(|e| CliError::Record(format!("experiment {id}: {e}")))?;
            experiments.push(Experiment { id, phases, q0 });
        }
        Ok(Self {
            plan,
            c_mode,
            experiments,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let spacings: Vec<String> = self.plan.spacings().iter().map(u64::to_string).collect();
        let _ = writeln!(out, "# f1_hz={}", format_float(self.plan.f1()));
        let _ = writeln!(out, "# resolution_hz={}", format_float(self.plan.resolution()));
        let _ = writeln!(out, "# spacings={}", spacings.join(","));
        let _ = writeln!(out, "# c_mode={}", self.c_mode);
        let with_truth = self.experiments.iter().any(|e| e.q0.is_some());
        out.push_str(if with_truth {
            "experiment_id,freq_hz,phase_rad,q0_m\n"
        } else {
            "experiment_id,freq_hz,phase_rad\n"
        });
        for e in &self.experiments {
            for (f, p) in self.plan.frequencies().iter().zip(e.phases.as_slice()) {
                let _ = write!(out, "{},{},{}", e.id, format_float(*f), format_float(*p));
                if with_truth {
                    let _ = write!(out, ",{}", e.q0.map(format_float).unwrap_or_default());
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Builds a synthetic record: experiment `k` is drawn from `StreamKey::new(seed).child(k)`.
pub fn synthesize(
    plan: &FrequencyPlan,
    c_mode: CMode,
    truths: &[(String, f64)],
    noise: &NoiseModel,
    seed: u64,
) -> Result<PhaseRecord> {
    let plan = plan.clone().with_c(c_mode.speed())?;
    let root = StreamKey::new(seed);
    let experiments = truths
        .iter()
        .enumerate()
        .map(|(k, (id, q0))| {
            Ok(Experiment {
                id: id.clone(),
                phases: synth_phases(&plan, *q0, noise, &root.child(k as u64))?,
                q0: Some(*q0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseRecord {
        plan,
        c_mode,
        experiments,
    })
}
