use std::path::{Path, PathBuf};

use mfi_core::analysis::{self, AnalysisOptions, AnalysisReport};
use mfi_core::estimator::unwrap_ok;
use mfi_core::model::sigma_theta_from_snr_db;
use mfi_core::montecarlo::{self, CurveRow, HistogramBin, Metric};
use mfi_core::{ls_estimate, CMode, EstimatorConfig, FrequencyPlan, PhaseVector};

use crate::args::{AnalyzeArgs, Command, Common, DesignArgs, EstimateArgs, ReplayArgs, ReportArgs, WindowArgs};
use crate::campaign::CampaignFile;
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};
use crate::planfile::{DesignRequest, Designed, PlanFile};
use crate::record::PhaseRecord;

pub const DEFAULT_REPORT_SNR_DB: f64 = 10.0;

pub const CURVE_COLUMNS: [&str; 12] = [
    "label", "snr_db", "metric", "value", "stderr", "mmse", "hmse", "crb", "trials", "seed", "pa_bound", "inlier_mse",
];

/// Runs one subcommand and returns the files it wrote.
pub fn run(common: &Common, command: &Command) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&common.out).map_err(|e| CliError::io(&common.out, e))?;
    match command {
        Command::Design(a) => cmd_design(common, a),
        Command::Analyze(a) => cmd_analyze(common, a),
        Command::Estimate(a) => cmd_estimate(common, a),
        Command::Simulate => cmd_simulate(common),
        Command::Replay(a) => cmd_replay(common, a),
    }
}

fn one_source(flag: &Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    match (flag, config) {
        (Some(p), None) | (None, Some(p)) => Ok(p.clone()),
        (Some(_), Some(_)) => Err(CliError::Usage(format!("give the {what} once, via --config or its own flag"))),
        (None, None) => Err(CliError::Usage(format!("no {what} given"))),
    }
}

fn sigma_of(r: &ReportArgs) -> Result<f64> {
    match (r.snr_db, r.sigma) {
        (_, Some(s)) => Ok(s),
        (Some(db), None) => Ok(sigma_theta_from_snr_db(db)),
        (None, None) => Ok(sigma_theta_from_snr_db(DEFAULT_REPORT_SNR_DB)),
    }
}

fn report_of(plan: &FrequencyPlan, r: &ReportArgs) -> Result<AnalysisReport> {
    let opts = AnalysisOptions {
        mainlobe_width: r.mainlobe_m,
        scan_step: r.scan_step_m,
    };
    Ok(analysis::analyze(plan, sigma_of(r)?, &opts)?)
}

pub fn report_table(plan: &FrequencyPlan, rep: &AnalysisReport) -> Table {
    let mut t = Table::new(vec!["metric", "value"]);
    let rows: Vec<(&str, Cell)> = vec![
        ("count", plan.len().into()),
        ("f1_hz", plan.f1().into()),
        ("bandwidth_hz", plan.bandwidth().into()),
        ("resolution_hz", plan.resolution().into()),
        ("spacing_gcd", plan.spacing_gcd().into()),
        ("c_m_per_s", plan.c().into()),
        ("sigma_theta_rad", rep.sigma_theta.into()),
        ("umr_m", rep.umr.into()),
        ("practical_umr_m", rep.practical_umr.into()),
        ("epsilon", rep.epsilon.into()),
        ("mmse_m2", rep.mmse.into()),
        ("hmse_m2", rep.hmse.into()),
        ("crb_m2", rep.crb.into()),
        ("mainlobe_width_m", rep.mainlobe_width.into()),
        ("scan_step_m", rep.scan_step.into()),
        ("max_sidelobe", rep.max_sidelobe.value.into()),
        ("max_sidelobe_location_m", rep.max_sidelobe.location.into()),
        ("coprime", rep.coprime.into()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    t
}

fn request_from_flags(common: &Common, a: &DesignArgs) -> Result<DesignRequest> {
    let missing = |name: &str| CliError::Usage(format!("design needs --{name}"));
    Ok(DesignRequest {
        method: a.method.ok_or_else(|| missing("method"))?,
        f1_hz: a.f1_hz,
        f_top_hz: a.f_top_hz,
        bandwidth_hz: a.bandwidth_hz.ok_or_else(|| missing("bandwidth-hz"))?,
        count: a.count.ok_or_else(|| missing("count"))?,
        resolution_hz: a.resolution_hz,
        prime_index: a.prime_index,
        k: a.k,
        umr_requirement_m: a.umr_min_m,
        seed: common.seed,
    })
}

fn cmd_design(common: &Common, a: &DesignArgs) -> Result<Vec<PathBuf>> {
    let flags_given = a.method.is_some()
        || a.f1_hz.is_some()
        || a.f_top_hz.is_some()
        || a.bandwidth_hz.is_some()
        || a.count.is_some()
        || a.resolution_hz.is_some()
        || a.prime_index.is_some()
        || a.k.is_some()
        || a.umr_min_m.is_some();
    let req = match (&common.config, flags_given) {
        (Some(_), true) => {
            return Err(CliError::Usage("give design parameters via --config or via flags, not both".into()));
        }
        (Some(path), false) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let mut req: DesignRequest = toml::from_str(&text).map_err(|e| CliError::parse(path, e.message()))?;
            req.seed = common.seed.or(req.seed);
            req
        }
        (None, _) => request_from_flags(common, a)?,
    };
    let mode = common.c_mode.unwrap_or(CMode::Exact);
    let designed: Designed = req.design(mode)?;
    let file = PlanFile::from_design(&req, &designed);
    let plan_path = common.out.join("plan.toml");
    std::fs::write(&plan_path, file.to_toml()).map_err(|e| CliError::io(&plan_path, e))?;
    // report from the plan as written, so analyze on the file reproduces it exactly
    let plan = file.to_plan(None)?;
    let mut table = report_table(&plan, &report_of(&plan, &a.report)?);
    table.push(vec!["method".into(), req.method.to_string().into()]);
    if let Some(sel) = &designed.selection {
        table.push(vec!["prime_index".into(), sel.prime_index.into()]);
        table.push(vec!["k".into(), sel.k.into()]);
    }
    if let Some(e) = designed.snap_error_hz {
        table.push(vec!["snap_error_hz".into(), e.into()]);
    }
    let report_path = table.write(&common.out, "report", common.format)?;
    Ok(vec![plan_path, report_path])
}

fn cmd_analyze(common: &Common, a: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let path = one_source(&a.plan, &common.config, "plan file")?;
    let plan = PlanFile::read(&path)?.to_plan(common.c_mode)?;
    let table = report_table(&plan, &report_of(&plan, &a.report)?);
    Ok(vec![table.write(&common.out, "analysis", common.format)?])
}

fn window_for(plan: &FrequencyPlan, w: &WindowArgs) -> Result<EstimatorConfig> {
    let cfg = match (w.lo_m, w.hi_m) {
        (Some(lo), Some(hi)) => EstimatorConfig::new(lo, hi, w.step_m),
        (None, None) => EstimatorConfig::half_beat_window(plan, w.step_m),
        _ => return Err(CliError::Usage("give both --lo-m and --hi-m, or neither".into())),
    };
    Ok(cfg.with_refine(w.refine))
}

fn cmd_estimate(common: &Common, a: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let path = one_source(&a.plan, &common.config, "plan file")?;
    let plan = PlanFile::read(&path)?.to_plan(common.c_mode)?;
    let phases = PhaseVector::new(a.phases.clone())?;
    let cfg = window_for(&plan, &a.window)?;
    let est = ls_estimate(&phases, &plan, &cfg)?;
    let mut t = Table::new(vec!["q_hat_m", "cost_at_min", "grid_index", "refined"]);
    t.push(vec![est.q_hat.into(), est.cost_at_min.into(), est.grid_index.into(), est.refined.into()]);
    Ok(vec![t.write(&common.out, "estimate", common.format)?])
}

pub fn curve_table(rows: &[CurveRow]) -> Table {
    let mut t = Table::new(CURVE_COLUMNS.to_vec());
    for r in rows {
        t.push(vec![
            r.label.as_str().into(),
            r.snr_db.into(),
            r.metric.to_string().into(),
            r.value.into(),
            r.stderr.into(),
            r.mmse.into(),
            r.hmse.into(),
            r.crb.into(),
            r.trials.into(),
            r.seed.into(),
            r.pa_bound.into(),
            r.inlier_mse.into(),
        ]);
    }
    t
}

fn histogram_table(label: &str, bins: &[HistogramBin]) -> Table {
    let mut t = Table::new(vec!["label", "bin_lo_m", "bin_hi_m", "count"]);
    for b in bins {
        t.push(vec![label.into(), b.lo.into(), b.hi.into(), b.count.into()]);
    }
    t
}

fn cmd_simulate(common: &Common) -> Result<Vec<PathBuf>> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("simulate needs --config <campaign.toml>".into()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let campaign = CampaignFile::read(path)?.resolve(base, common.seed, common.c_mode)?;
    let mut written = Vec::new();
    if !campaign.spec.outputs.is_empty() {
        let rows = montecarlo::run_campaign(&campaign.spec)?;
        for metric in &campaign.spec.outputs {
            let subset: Vec<CurveRow> = rows.iter().filter(|r| r.metric == *metric).cloned().collect();
            written.push(curve_table(&subset).write(&common.out, &metric.to_string(), common.format)?);
        }
    }
    if let Some((lp, params)) = &campaign.sweep {
        let sweep = montecarlo::run_ambiguity_sweep(&lp.plan, campaign.spec.q0, params)?;
        written.push(histogram_table(&lp.label, &sweep.histogram).write(
            &common.out,
            &Metric::Histogram.to_string(),
            common.format,
        )?);
        let mut t = Table::new(vec![
            "label",
            "snr_db",
            "trials",
            "practical_umr_m",
            "near_fraction",
            "far_fraction",
            "far_center_m",
        ]);
        t.push(vec![
            lp.label.as_str().into(),
            params.snr_db.into(),
            params.trials.into(),
            sweep.practical_umr.into(),
            sweep.near_fraction.into(),
            sweep.far_fraction.into(),
            sweep.far_center.into(),
        ]);
        written.push(t.write(&common.out, "clusters", common.format)?);
    }
    Ok(written)
}

fn cmd_replay(common: &Common, a: &ReplayArgs) -> Result<Vec<PathBuf>> {
    let path = one_source(&a.records, &common.config, "phase record file")?;
    let mut record = PhaseRecord::read(&path)?;
    if let Some(mode) = common.c_mode {
        record.plan = record.plan.with_c(mode.speed())?;
    }
    if !(a.bin_m > 0.0) {
        return Err(CliError::Usage("--bin-m must be positive".into()));
    }
    let plan = &record.plan;
    let cfg = window_for(plan, &a.window)?;
    let search = mfi_core::estimator::GridSearch::new(plan, cfg)?;
    let mut est_table = Table::new(vec!["experiment_id", "q_hat_m", "q0_m", "error_m", "unwrap_ok", "cost_at_min"]);
    let mut values = Vec::new();
    let mut sq_errors = Vec::new();
    for e in &record.experiments {
        let est = search.search(&e.phases)?;
        let error = e.q0.map(|q0| est.q_hat - q0);
        let ok = e.q0.map(|q0| unwrap_ok(est.q_hat, q0, plan));
        if let Some(err) = error {
            sq_errors.push(err * err);
        }
        values.push(error.unwrap_or(est.q_hat));
        est_table.push(vec![
            e.id.as_str().into(),
            est.q_hat.into(),
            e.q0.into(),
            error.into(),
            ok.map_or(Cell::Empty, Cell::Bool),
            est.cost_at_min.into(),
        ]);
    }
    let mut summary = Table::new(vec!["metric", "value"]);
    summary.push(vec!["experiments".into(), record.experiments.len().into()]);
    summary.push(vec!["with_truth".into(), sq_errors.len().into()]);
    let mse = (!sq_errors.is_empty()).then(|| sq_errors.iter().sum::<f64>() / sq_errors.len() as f64);
    summary.push(vec!["mse_m2".into(), mse.into()]);
    summary.push(vec![
        "histogram_of".into(),
        if sq_errors.len() == values.len() { "error_m" } else { "q_hat_m" }.into(),
    ]);
    let mut hist = Table::new(vec!["bin_lo_m", "bin_hi_m", "count"]);
    let mut bins = std::collections::BTreeMap::new();
    for v in &values {
        *bins.entry((v / a.bin_m).floor() as i64).or_insert(0usize) += 1;
    }
    for (k, n) in bins {
        hist.push(vec![(k as f64 * a.bin_m).into(), ((k + 1) as f64 * a.bin_m).into(), n.into()]);
    }
    Ok(vec![
        est_table.write(&common.out, "estimates", common.format)?,
        summary.write(&common.out, "summary", common.format)?,
        hist.write(&common.out, "histogram", common.format)?,
    ])
}
