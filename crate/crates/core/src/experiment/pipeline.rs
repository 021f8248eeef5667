//! The experiment commands. Each one reads its inputs from and writes its
//! artifacts to an output directory; results depend only on the config.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::*;
use super::config::ExperimentConfig;
use super::prism::export_prism;
use crate::abstraction::{build_tank_system, estimate_error_model, AbstractSystem, ErrorModel, Grid};
use crate::metrics::{
    calibration_report, reliability_bins, roc_auc, wilson_interval, CalibrationReport, PredictionRecord,
    ReliabilityBin, MIN_PLOT_COUNT, Z_95,
};
use crate::model_check::{check_bounded_safety, BoundedSafetyQuery, SafetyTable};
use crate::monitor::{annotate_trace, joint_belief, MonitorContext, MonitorVariant};
use crate::numfmt::sig17;
use crate::pa::{dump, CategoricalDistribution};
use crate::watertank::{
    run_trial, sample_initial_levels, trial_rng, ControlConfig, FilterState, TankParams, TrialTrace,
};
use crate::{Error, Result};

/// Calibration trials draw from streams above this offset so they never
/// share randomness with campaign trials.
pub const CALIBRATION_STREAM_BASE: u64 = 1 << 40;

fn run_trials(
    params: &TankParams,
    seed: u64,
    stream_base: u64,
    trials: usize,
    length: usize,
    low: f64,
    high: f64,
) -> Vec<TrialTrace> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, stream_base + i as u64);
            let initial = sample_initial_levels(params, low, high, &mut rng);
            run_trial(params, &initial, length, &mut rng)
        })
        .collect()
}

pub fn calibration_traces(cfg: &ExperimentConfig) -> Vec<TrialTrace> {
    let c = &cfg.calibration;
    run_trials(
        &cfg.tank,
        cfg.seed,
        CALIBRATION_STREAM_BASE,
        c.trials,
        c.length,
        c.initial_low,
        c.initial_high,
    )
}

/// Campaign trials without monitor outputs.
pub fn campaign_traces(cfg: &ExperimentConfig) -> Vec<TrialTrace> {
    let c = &cfg.campaign;
    run_trials(&cfg.tank, cfg.seed, 0, c.trials, c.length, c.initial_low, c.initial_high)
}

pub fn calibrate(cfg: &ExperimentConfig) -> Result<Vec<ErrorModel>> {
    estimate_error_model(&calibration_traces(cfg), cfg.calibration.bin_width)
}

/// Estimates the perception-error model and writes it with its histogram.
pub fn cmd_calibrate(cfg: &ExperimentConfig, out: &Path) -> Result<ErrorModelArtifact> {
    let models = calibrate(cfg)?;
    let prov = Provenance::new(cfg, "calibrate");
    let mut csv = prov.comment("#");
    csv.push_str("tank,bin_index,lower,upper,probability\n");
    for (i, m) in models.iter().enumerate() {
        for b in &m.bins {
            writeln!(csv, "{},{},{},{},{}", i + 1, b.index, b.lower, b.upper, sig17(b.probability)).unwrap();
        }
    }
    write_text(&out.join(ERROR_HISTOGRAM_CSV), &csv)?;
    let art = ErrorModelArtifact {
        provenance: prov,
        tank: cfg.tank.clone(),
        models,
    };
    write_json(&out.join(ERROR_MODEL_JSON), &art)?;
    log::info!(
        "error model from {} samples per tank, {} bins",
        art.models[0].samples,
        art.models.iter().map(|m| m.bins.len()).max().unwrap_or(0)
    );
    Ok(art)
}

/// Error models written by `calibrate` for the same tank parameters.
pub fn load_error_models(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ErrorModel>> {
    let path = out.join(ERROR_MODEL_JSON);
    let art: ErrorModelArtifact = read_json(&path)?;
    if art.tank != cfg.tank {
        return Err(Error::Artifact {
            path,
            msg: "error model was estimated for different tank parameters".into(),
        });
    }
    if art.models.len() != cfg.tank.tanks {
        return Err(Error::Artifact {
            path,
            msg: format!("{} models for {} tanks", art.models.len(), cfg.tank.tanks),
        });
    }
    Ok(art.models)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractSummary {
    pub provenance: Provenance,
    pub num_states: usize,
    pub num_actions: usize,
    pub num_transitions: usize,
    pub unsafe_states: usize,
    pub clipped: usize,
    pub grid: GridMeta,
    pub config_names: Vec<String>,
}

fn tank_grid(params: &TankParams) -> Result<Grid> {
    Grid::uniform(params.tanks, params.level_axis())
}

fn summarize(cfg: &ExperimentConfig, command: &str, sys: &AbstractSystem) -> Result<AbstractSummary> {
    Ok(AbstractSummary {
        provenance: Provenance::new(cfg, command),
        num_states: sys.pa.num_states(),
        num_actions: sys.pa.num_actions(),
        num_transitions: sys.pa.num_transitions(),
        unsafe_states: sys.unsafe_states.len(),
        clipped: sys.clipped,
        grid: GridMeta::of(&tank_grid(&cfg.tank)?),
        config_names: sys.layout.config_names.clone(),
    })
}

/// Builds the abstract system and writes its summary and text dump.
pub fn cmd_abstract(cfg: &ExperimentConfig, out: &Path) -> Result<AbstractSummary> {
    let models = load_error_models(cfg, out)?;
    let sys = build_tank_system(&cfg.tank, &models)?;
    let summary = summarize(cfg, "abstract", &sys)?;
    log::info!(
        "abstract system: {} states, {} transitions",
        summary.num_states,
        summary.num_transitions
    );
    let mut text = summary.provenance.comment("#");
    text.push_str(&dump::to_text(&sys.pa));
    write_text(&out.join(ABSTRACT_PA), &text)?;
    write_json(&out.join(ABSTRACT_JSON), &summary)?;
    Ok(summary)
}

/// Bounded safety values of every `(state, action)` of the abstract system.
pub fn check_system(cfg: &ExperimentConfig, models: &[ErrorModel]) -> Result<(AbstractSystem, SafetyTable)> {
    let sys = build_tank_system(&cfg.tank, models)?;
    let q = BoundedSafetyQuery::new(
        &sys.pa,
        sys.unsafe_states.iter().copied(),
        cfg.tank.horizon,
        cfg.check.mode,
    )?;
    let table = check_bounded_safety(&sys.pa, &q)?;
    Ok((sys, table))
}

/// Builds the abstract system, computes the safety table and writes it
/// with its sidecar.
pub fn cmd_check(cfg: &ExperimentConfig, out: &Path) -> Result<TableSidecar> {
    let models = load_error_models(cfg, out)?;
    let (sys, table) = check_system(cfg, &models)?;
    let summary = summarize(cfg, "check", &sys)?;
    log::info!(
        "checked {} states, {} transitions, {} entries",
        summary.num_states,
        summary.num_transitions,
        table.len()
    );
    let side = TableSidecar {
        provenance: summary.provenance,
        horizon: table.horizon(),
        mode: table.mode(),
        num_states: summary.num_states,
        num_actions: summary.num_actions,
        num_transitions: summary.num_transitions,
        num_entries: table.len(),
        unsafe_states: summary.unsafe_states,
        grid: summary.grid,
        config_names: summary.config_names,
        tank: cfg.tank.clone(),
    };
    let mut csv = side.provenance.comment("#").into_bytes();
    table
        .write_csv(&mut csv)
        .map_err(|e| Error::io(out.join(TABLE_CSV), e))?;
    write_text(&out.join(TABLE_CSV), &String::from_utf8(csv).expect("ASCII table"))?;
    write_json(&out.join(TABLE_JSON), &side)?;
    Ok(side)
}

/// Monitor context for a table written by `check`.
pub fn monitor_context(table: SafetyTable, side: &TableSidecar) -> Result<MonitorContext> {
    let grid = tank_grid(&side.tank)?;
    MonitorContext::new(table, grid, side.layout())
}

fn load_context(cfg: &ExperimentConfig, table_csv: &Path) -> Result<MonitorContext> {
    let (table, side) = load_table(table_csv)?;
    if side.tank != cfg.tank {
        return Err(Error::Artifact {
            path: table_csv.to_path_buf(),
            msg: "table was computed for different tank parameters".into(),
        });
    }
    monitor_context(table, &side)
}

/// One record per timestep with a known label.
pub fn prediction_records(traces: &[TrialTrace], variant: MonitorVariant) -> Vec<PredictionRecord> {
    traces
        .iter()
        .flat_map(|t| t.labelled())
        .filter_map(|(r, safe)| {
            r.monitors.map(|m| PredictionRecord {
                estimate: variant.select(&m),
                outcome: safe,
            })
        })
        .collect()
}

/// One record per trial: the lowest estimate over its labelled steps,
/// against whether the trial stayed safe.
pub fn per_trial_records(traces: &[TrialTrace], variant: MonitorVariant) -> Vec<PredictionRecord> {
    traces
        .iter()
        .filter_map(|t| {
            t.labelled()
                .filter_map(|(r, _)| r.monitors.map(|m| variant.select(&m)))
                .reduce(f64::min)
                .map(|estimate| PredictionRecord {
                    estimate,
                    outcome: !t.breached(),
                })
        })
        .collect()
}

/// Whether a plottable bin is consistent with `P(safe | p̂) >= p̂`: the upper
/// end of the 95% Wilson interval of the observed frequency reaches the
/// bin's mean estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservatismCheck {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_estimate: f64,
    pub frequency: f64,
    pub frequency_upper: f64,
    pub holds: bool,
}

pub fn conservatism_checks(bins: &[ReliabilityBin]) -> Vec<ConservatismCheck> {
    bins.iter()
        .filter(|b| b.plottable)
        .map(|b| {
            let (_, hi) = wilson_interval(b.positives(), b.count, Z_95);
            ConservatismCheck {
                lower: b.lower,
                upper: b.upper,
                count: b.count,
                mean_estimate: b.mean_estimate,
                frequency: b.frequency,
                frequency_upper: hi,
                holds: hi >= b.mean_estimate,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub monitor: MonitorVariant,
    pub report: CalibrationReport,
    pub per_trial: CalibrationReport,
    pub conservatism: Vec<ConservatismCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub provenance: Provenance,
    pub trials: usize,
    pub length: usize,
    pub horizon: usize,
    pub breached_trials: usize,
    pub failure_rate: f64,
    pub records: usize,
    pub monitors: Vec<MonitorSummary>,
}

impl CampaignSummary {
    pub fn monitor(&self, v: MonitorVariant) -> &MonitorSummary {
        self.monitors
            .iter()
            .find(|m| m.monitor == v)
            .expect("summary covers every monitor")
    }
}

/// Campaign trials with all three monitors attached.
pub fn monitored_campaign(cfg: &ExperimentConfig, ctx: &MonitorContext) -> Result<Vec<TrialTrace>> {
    let mut traces = campaign_traces(cfg);
    traces
        .par_iter_mut()
        .try_for_each(|t| annotate_trace(ctx, &cfg.tank, t))?;
    Ok(traces)
}

pub fn summarize_campaign(cfg: &ExperimentConfig, traces: &[TrialTrace]) -> Result<CampaignSummary> {
    let breached = traces.iter().filter(|t| t.breached()).count();
    let mut monitors = Vec::new();
    let mut records = 0;
    for v in MonitorVariant::ALL {
        let recs = prediction_records(traces, v);
        records = recs.len();
        let report = calibration_report(&recs, MIN_PLOT_COUNT)?;
        let per_trial = calibration_report(&per_trial_records(traces, v), MIN_PLOT_COUNT)?;
        let conservatism = conservatism_checks(&report.bins);
        monitors.push(MonitorSummary {
            monitor: v,
            report,
            per_trial,
            conservatism,
        });
    }
    Ok(CampaignSummary {
        provenance: Provenance::new(cfg, "campaign"),
        trials: traces.len(),
        length: cfg.campaign.length,
        horizon: cfg.tank.horizon,
        breached_trials: breached,
        failure_rate: breached as f64 / traces.len() as f64,
        records,
        monitors,
    })
}

fn opt_sig17(x: Option<f64>) -> String {
    x.map(sig17).unwrap_or_default()
}

fn summary_table(prov: &Provenance, rows: &[(MonitorVariant, &CalibrationReport)]) -> String {
    let mut s = prov.comment("#");
    s.push_str("monitor,ece,ecce,brier,auc\n");
    for (v, r) in rows {
        writeln!(
            s,
            "{v},{},{},{},{}",
            sig17(r.ece),
            sig17(r.ecce),
            sig17(r.brier),
            opt_sig17(r.auc)
        )
        .unwrap();
    }
    s
}

fn bins_csv(prov: &Provenance, bins: &[ReliabilityBin]) -> String {
    let mut s = prov.comment("#");
    s.push_str("lower,upper,count,mean_estimate,frequency,plottable\n");
    for b in bins {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            b.lower,
            b.upper,
            b.count,
            sig17(b.mean_estimate),
            sig17(b.frequency),
            b.plottable as u8
        )
        .unwrap();
    }
    s
}

fn trace_header(tanks: usize) -> String {
    let mut cols = vec!["trial".to_string(), "t".to_string()];
    for prefix in ["level", "reading", "estimate"] {
        cols.extend((1..=tanks).map(|i| format!("{prefix}_{i}")));
    }
    cols.push("config".into());
    cols
        .into_iter()
        .chain(MONITOR_COLUMNS.iter().map(|c| c.to_string()))
        .chain(std::iter::once("safe_next".to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

const MONITOR_COLUMNS: [&str; 3] = ["monitor_point", "monitor_distribution", "monitor_true"];

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Per-timestep trace rows; filter beliefs are not stored since `monitor`
/// replays the filter from the readings.
pub fn traces_csv(prov: &Provenance, params: &TankParams, traces: &[TrialTrace]) -> String {
    let mut s = prov.comment("#");
    s.push_str(&trace_header(params.tanks));
    s.push('\n');
    for (i, tr) in traces.iter().enumerate() {
        for r in &tr.records {
            let m = r.monitors.map(|m| [m.point, m.distribution, m.true_state]);
            let label = match r.safe_next {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(
                s,
                "{i},{},{},{},{},{},{},{}",
                r.t,
                join_floats(&r.levels),
                join_floats(&r.readings),
                join_floats(&r.estimates),
                r.config.name(params.tanks),
                m.map(|m| m.iter().map(|&x| sig17(x)).collect::<Vec<_>>().join(","))
                    .unwrap_or_else(|| ",,".into()),
                label
            )
            .unwrap();
        }
    }
    s
}

/// Runs the monitored campaign and writes traces, metrics, reliability and
/// ROC data.
pub fn cmd_campaign(cfg: &ExperimentConfig, out: &Path) -> Result<CampaignSummary> {
    let ctx = load_context(cfg, &out.join(TABLE_CSV))?;
    let traces = monitored_campaign(cfg, &ctx)?;
    let summary = summarize_campaign(cfg, &traces)?;
    let prov = &summary.provenance;
    write_text(&out.join(TRACES_CSV), &traces_csv(prov, &cfg.tank, &traces))?;
    let rows: Vec<_> = summary.monitors.iter().map(|m| (m.monitor, &m.report)).collect();
    write_text(&out.join(SUMMARY_CSV), &summary_table(prov, &rows))?;
    let rows: Vec<_> = summary.monitors.iter().map(|m| (m.monitor, &m.per_trial)).collect();
    write_text(&out.join(PER_TRIAL_CSV), &summary_table(prov, &rows))?;
    for m in &summary.monitors {
        let name = m.monitor.name();
        write_text(&out.join(reliability_csv(name)), &bins_csv(prov, &m.report.bins))?;
        let mut roc = prov.comment("#");
        roc.push_str("threshold,fpr,tpr\n");
        if let Ok((curve, _)) = roc_auc(&prediction_records(&traces, m.monitor)) {
            for p in curve {
                writeln!(roc, "{},{},{}", sig17(p.threshold), sig17(p.fpr), sig17(p.tpr)).unwrap();
            }
        }
        write_text(&out.join(roc_csv(name)), &roc)?;
    }
    write_json(&out.join(SUMMARY_JSON), &summary)?;
    log::info!(
        "campaign: {} trials, {} breached, {} records",
        summary.trials,
        summary.breached_trials,
        summary.records
    );
    Ok(summary)
}

/// Each cell probability of a belief as a prediction that the true level
/// lies in that cell.
pub fn belief_records<'a>(
    belief: &'a CategoricalDistribution<usize>,
    cells: usize,
    true_cell: usize,
) -> impl Iterator<Item = PredictionRecord> + 'a {
    (0..cells).map(move |k| PredictionRecord {
        estimate: belief.prob(&k).clamp(0.0, 1.0),
        outcome: k == true_cell,
    })
}

/// Cell predictions of every filter belief in `traces`, per timestep and
/// tank.
pub fn estimator_records(traces: &[TrialTrace], params: &TankParams) -> Vec<PredictionRecord> {
    let axis = params.level_axis();
    let cells = axis.cells();
    traces
        .iter()
        .flat_map(|t| &t.records)
        .flat_map(|r| {
            r.beliefs
                .iter()
                .zip(&r.levels)
                .flat_map(|(b, &x)| belief_records(b, cells, axis.clamped_cell(x).0))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub provenance: Provenance,
    pub records: usize,
    pub ece: f64,
    pub bins: Vec<ReliabilityBin>,
}

/// Calibration of the filter itself over the campaign trials.
pub fn cmd_validate_estimator(cfg: &ExperimentConfig, out: &Path) -> Result<EstimatorSummary> {
    let traces = campaign_traces(cfg);
    let records = estimator_records(&traces, &cfg.tank);
    let ece = crate::metrics::ece(&records)?;
    let bins = reliability_bins(&records, MIN_PLOT_COUNT);
    let summary = EstimatorSummary {
        provenance: Provenance::new(cfg, "validate-estimator"),
        records: records.len(),
        ece,
        bins,
    };
    write_text(&out.join(ESTIMATOR_CSV), &bins_csv(&summary.provenance, &summary.bins))?;
    write_json(&out.join(ESTIMATOR_JSON), &summary)?;
    log::info!("estimator ECE {} over {} cell predictions", ece, records.len());
    Ok(summary)
}

/// Table of the campaign metrics, with the estimator ECE when available.
pub fn cmd_report(out: &Path) -> Result<String> {
    let summary: CampaignSummary = read_json(&out.join(SUMMARY_JSON))?;
    let mut s = String::new();
    writeln!(
        s,
        "<!-- safemon {} report config_hash={} seed={} -->",
        summary.provenance.version, summary.provenance.config_hash, summary.provenance.seed
    )
    .unwrap();
    writeln!(
        s,
        "{} trials of {} steps, T = {}: {} breached ({:.1}%), {} labelled predictions\n",
        summary.trials,
        summary.length,
        summary.horizon,
        summary.breached_trials,
        100.0 * summary.failure_rate,
        summary.records
    )
    .unwrap();
    s.push_str("| monitor | ECE | ECCE | Brier | AUC |\n|---|---|---|---|---|\n");
    for m in &summary.monitors {
        let r = &m.report;
        writeln!(
            s,
            "| {} | {:.5} | {:.5} | {:.5} | {} |",
            m.monitor,
            r.ece,
            r.ecce,
            r.brier,
            r.auc.map(|a| format!("{a:.3}")).unwrap_or_else(|| "n/a".into())
        )
        .unwrap();
    }
    let dist = summary.monitor(MonitorVariant::Distribution);
    let failed = dist.conservatism.iter().filter(|c| !c.holds).count();
    writeln!(
        s,
        "\nDistribution monitor conservatism: {} of {} plottable bins consistent.",
        dist.conservatism.len() - failed,
        dist.conservatism.len()
    )
    .unwrap();
    let est = out.join(ESTIMATOR_JSON);
    if est.exists() {
        let e: EstimatorSummary = read_json(&est)?;
        writeln!(s, "Estimator ECE: {:.5} over {} cell predictions.", e.ece, e.records).unwrap();
    }
    write_text(&out.join(REPORT_MD), &s)?;
    Ok(s)
}

/// Recomputes the three monitors for a trace CSV against a table and writes
/// the trace with fresh monitor columns. Returns the number of rows.
pub fn cmd_monitor(table_csv: &Path, trace_csv: &Path, out_csv: &Path) -> Result<usize> {
    let (table, side) = load_table(table_csv)?;
    let params = side.tank.clone();
    let ctx = monitor_context(table, &side)?;
    let configs = ControlConfig::enumerate(params.tanks);
    let bad = |msg: String| Error::Artifact {
        path: trace_csv.to_path_buf(),
        msg,
    };

    let f = fs::File::open(trace_csv).map_err(|e| Error::io(trace_csv, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(f));
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let trial_col = col("trial")?;
    let t_col = col("t")?;
    let config_col = col("config")?;
    let per_tank = |prefix: &str| -> Result<Vec<usize>> {
        (1..=params.tanks).map(|i| col(&format!("{prefix}_{i}"))).collect()
    };
    let level_cols = per_tank("level")?;
    let reading_cols = per_tank("reading")?;
    let estimate_cols = per_tank("estimate")?;
    let kept: Vec<usize> = (0..headers.len())
        .filter(|&i| !MONITOR_COLUMNS.contains(&&headers[i]))
        .collect();

    let prov = Provenance {
        command: "monitor".into(),
        ..side.provenance.clone()
    };
    let mut s = prov.comment("#");
    let mut names: Vec<&str> = kept.iter().map(|&i| &headers[i]).collect();
    names.extend(MONITOR_COLUMNS);
    s.push_str(&names.join(","));
    s.push('\n');

    let mut filter = FilterState::uniform(&params);
    let mut current_trial: Option<String> = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let floats = |cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter()
                .map(|&c| {
                    rec[c]
                        .parse()
                        .map_err(|_| bad(format!("line {line}: bad number {:?}", &rec[c])))
                })
                .collect()
        };
        if current_trial.as_deref() != Some(&rec[trial_col]) {
            filter = FilterState::uniform(&params);
            current_trial = Some(rec[trial_col].to_string());
        }
        let readings = floats(&reading_cols)?;
        let levels = floats(&level_cols)?;
        let estimates = floats(&estimate_cols)?;
        let config = configs
            .iter()
            .position(|c| c.name(params.tanks) == rec[config_col])
            .ok_or_else(|| bad(format!("line {line}: unknown configuration {:?}", &rec[config_col])))?;
        filter.measurement_update(&params, &readings);
        let beliefs: Vec<_> = filter.tanks.iter().map(|f| f.distribution()).collect();
        let t: usize = rec[t_col]
            .parse()
            .map_err(|_| bad(format!("line {line}: bad timestep {:?}", &rec[t_col])))?;
        let point = ctx.monitor_point(&estimates, config, t)?.value;
        let dist = ctx.monitor_distribution(&joint_belief(&beliefs), config, t)?.value;
        let truth = ctx.monitor_true(&levels, config, t)?.value;
        filter.predict(&params, configs[config].fill);

        let mut fields: Vec<String> = kept.iter().map(|&i| rec[i].to_string()).collect();
        fields.extend([sig17(point), sig17(dist), sig17(truth)]);
        s.push_str(&fields.join(","));
        s.push('\n');
        rows += 1;
    }
    write_text(out_csv, &s)?;
    Ok(rows)
}

/// Exports either a PA given in text form (unsafe states carry
/// `unsafe_label`) or the abstract system of the config.
pub fn cmd_export_prism(
    cfg: &ExperimentConfig,
    out: &Path,
    pa_text: Option<&Path>,
    unsafe_label: &str,
) -> Result<(String, String)> {
    let (pa, q) = match pa_text {
        Some(path) => {
            let pa = dump::parse_text(&read_text(path)?)?;
            let q = BoundedSafetyQuery::from_label(&pa, unsafe_label, cfg.tank.horizon, cfg.check.mode)?;
            (pa, q)
        }
        None => {
            let models = load_error_models(cfg, out)?;
            let sys = build_tank_system(&cfg.tank, &models)?;
            let q = BoundedSafetyQuery::new(
                &sys.pa,
                sys.unsafe_states.iter().copied(),
                cfg.tank.horizon,
                cfg.check.mode,
            )?;
            (sys.pa, q)
        }
    };
    let (model, props) = export_prism(&pa, &q)?;
    write_text(&out.join(PRISM_MODEL), &model)?;
    write_text(&out.join(PRISM_PROPS), &props)?;
    Ok((model, props))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ece;

    fn small_campaign(sigma: f64, outlier: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.tank.sensor_sigma = sigma;
        cfg.tank.outlier_prob = outlier;
        cfg.campaign.trials = 20;
        cfg.campaign.length = 30;
        cfg
    }

    #[test]
    fn confidently_wrong_belief_is_miscalibrated() {
        let belief = CategoricalDistribution::new(vec![(0, 0.9), (1, 0.1)]).unwrap();
        let records: Vec<_> = belief_records(&belief, 3, 2).collect();
        assert!((ece(&records).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_filter_is_calibrated() {
        let cfg = small_campaign(1e-6, 0.0);
        let records = estimator_records(&campaign_traces(&cfg), &cfg.tank);
        assert!(ece(&records).unwrap() < 0.01);
    }

    #[test]
    fn default_filter_is_calibrated() {
        let cfg = small_campaign(8.0, 0.1);
        let records = estimator_records(&campaign_traces(&cfg), &cfg.tank);
        assert!(ece(&records).unwrap() < 0.05);
    }

    #[test]
    fn campaign_is_reproducible() {
        let cfg = small_campaign(8.0, 0.1);
        let a = campaign_traces(&cfg);
        let b = campaign_traces(&cfg);
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.records.len(), y.records.len());
            for (r, s) in x.records.iter().zip(&y.records) {
                assert_eq!(r.levels, s.levels);
                assert_eq!(r.readings, s.readings);
            }
        }
    }

    #[test]
    fn conservatism_uses_plottable_bins_only() {
        let mut records: Vec<_> = (0..100)
            .map(|i| PredictionRecord::new(0.85, i < 80).unwrap())
            .collect();
        records.extend((0..10).map(|_| PredictionRecord::new(0.15, true).unwrap()));
        let checks = conservatism_checks(&reliability_bins(&records, MIN_PLOT_COUNT));
        assert_eq!(checks.len(), 1);
        assert_eq!(checks[0].count, 100);
        // 80/100 against 0.85: within the Wilson interval
        assert!(checks[0].holds);
        let over: Vec<_> = (0..100)
            .map(|i| PredictionRecord::new(0.95, i < 60).unwrap())
            .collect();
        assert!(!conservatism_checks(&reliability_bins(&over, MIN_PLOT_COUNT))[0].holds);
    }
}
