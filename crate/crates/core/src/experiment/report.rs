//! Aggregation of run records into per-step and time-averaged metrics, and
//! CSV / JSON emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::metrics::{boundedness_probe, nci, CredibilityInputs, MIN_BOUNDEDNESS_HORIZON, MIN_BOUNDEDNESS_RUNS};

use super::config::{ExperimentConfig, ExperimentPlan};
use super::run::{execute_runs, ExperimentError, RkhsDiagnostics, Role, RunRecord};

/// Cross-run metrics of one filter at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepMetrics {
    pub k: usize,
    /// Runs with an estimate at this step.
    pub alive: usize,
    pub rmse: Option<f64>,
    pub rcrlb: Option<f64>,
    pub nci: Option<f64>,
    pub position_rmse: Option<f64>,
    pub position_rcrlb: Option<f64>,
    pub position_nci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessSummary {
    pub eta: f64,
    pub lambda: f64,
    pub nu: f64,
    pub pass: bool,
}

/// Time averages run over steps `1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSummary {
    pub label: String,
    pub role: Role,
    pub runs: usize,
    pub divergent_runs: usize,
    pub divergence_rate: f64,
    pub rmse: Option<f64>,
    pub rcrlb: Option<f64>,
    pub nci: Option<f64>,
    pub position_rmse: Option<f64>,
    pub position_rcrlb: Option<f64>,
    pub position_nci: Option<f64>,
    /// Steps where NCI could not be formed (fewer than two runs with nonzero error).
    pub nci_skipped_steps: usize,
    pub boundedness: Option<BoundednessSummary>,
    /// Worst case over runs.
    pub rkhs: Option<RkhsDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub scenario: String,
    pub runs: usize,
    pub horizon: usize,
    pub n_x: usize,
    pub position_indices: Option<Vec<usize>>,
    pub records: Vec<RunRecord>,
    pub summaries: Vec<FilterSummary>,
    /// Per-step metrics, parallel to `summaries`.
    pub steps: Vec<Vec<StepMetrics>>,
    pub wall_clock_seconds: f64,
}

impl ExperimentResult {
    pub fn summary(&self, label: &str) -> Option<&FilterSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    pub fn step_metrics(&self, label: &str) -> Option<&[StepMetrics]> {
        let i = self.summaries.iter().position(|s| s.label == label)?;
        Some(&self.steps[i])
    }
}

/// Runs a validated plan and aggregates its records.
pub fn run_experiment(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentResult, ExperimentError> {
    let started = Instant::now();
    let records = execute_runs(plan, workers)?;
    let (summaries, steps) = aggregate(plan, &records);
    Ok(ExperimentResult {
        config: plan.config.clone(),
        config_hash: plan.config_hash.clone(),
        scenario: plan.scenario.model.name.clone(),
        runs: plan.runs,
        horizon: plan.horizon,
        n_x: plan.scenario.model.dims.n_x,
        position_indices: plan.scenario.defaults.position_indices.clone(),
        records,
        summaries,
        steps,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

fn project(v: &DVector<f64>, idx: Option<&[usize]>) -> DVector<f64> {
    match idx {
        Some(idx) => DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i])),
        None => v.clone(),
    }
}

fn project_cov(m: &DMatrix<f64>, idx: Option<&[usize]>) -> DMatrix<f64> {
    match idx {
        Some(idx) => DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]),
        None => m.clone(),
    }
}

struct StepSample {
    error: DVector<f64>,
    cov: DMatrix<f64>,
    bound: Option<DVector<f64>>,
}

/// RMSE, RCRLB and NCI of one step over the alive runs, optionally restricted to `idx`.
fn step_stats(samples: &[StepSample], bound_runs: &[&DVector<f64>], idx: Option<&[usize]>) -> (Option<f64>, Option<f64>, Option<f64>) {
    if samples.is_empty() {
        return (None, None, None);
    }
    let errors: Vec<DVector<f64>> = samples.iter().map(|s| project(&s.error, idx)).collect();
    let rmse = (errors.iter().map(|e| e.norm_squared()).sum::<f64>() / errors.len() as f64).sqrt();
    let rcrlb = (!bound_runs.is_empty()).then(|| {
        let total: f64 = bound_runs.iter().map(|b| project(b, idx).sum()).sum();
        (total / bound_runs.len() as f64).sqrt()
    });
    let covs = samples.iter().map(|s| project_cov(&s.cov, idx)).collect();
    let nci = nci(&CredibilityInputs::with_sample_mse(errors, covs)).ok().map(|r| r.value);
    (Some(rmse), rcrlb, nci)
}

fn time_average(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn merge_rkhs(acc: Option<RkhsDiagnostics>, d: &RkhsDiagnostics) -> RkhsDiagnostics {
    match acc {
        None => d.clone(),
        Some(a) => RkhsDiagnostics {
            max_a_norm: a.max_a_norm.max(d.max_a_norm),
            max_b_norm: a.max_b_norm.max(d.max_b_norm),
            min_q_eig: a.min_q_eig.min(d.min_q_eig),
            min_r_eig: a.min_r_eig.min(d.min_r_eig),
            max_dictionary_len: a.max_dictionary_len.max(d.max_dictionary_len),
            floor_triggers: a.floor_triggers + d.floor_triggers,
            columns_consistent: a.columns_consistent && d.columns_consistent,
        },
    }
}

/// Deterministic fold over records in run order.
pub fn aggregate(plan: &ExperimentPlan, records: &[RunRecord]) -> (Vec<FilterSummary>, Vec<Vec<StepMetrics>>) {
    let Some(first) = records.first() else {
        return (Vec::new(), Vec::new());
    };
    let positions = plan.scenario.defaults.position_indices.as_deref();
    let steps = plan.horizon + 1;
    let mut summaries = Vec::new();
    let mut all_steps = Vec::new();
    for (t, template) in first.tracks.iter().enumerate() {
        let tracks: Vec<_> = records.iter().map(|r| &r.tracks[t]).collect();
        let mut per_step = Vec::with_capacity(steps);
        let mut skipped = 0;
        for k in 0..steps {
            let samples: Vec<StepSample> = tracks
                .iter()
                .filter_map(|tr| {
                    Some(StepSample {
                        error: tr.error(k)?,
                        cov: tr.covariances[k].clone()?,
                        bound: tr.bound[k].clone(),
                    })
                })
                .collect();
            let bounds: Vec<&DVector<f64>> = tracks.iter().filter_map(|tr| tr.bound[k].as_ref()).collect();
            let (rmse, rcrlb, nci_k) = step_stats(&samples, &bounds, None);
            let (position_rmse, position_rcrlb, position_nci) = match positions {
                Some(idx) => step_stats(&samples, &bounds, Some(idx)),
                None => (None, None, None),
            };
            if k > 0 && nci_k.is_none() {
                skipped += 1;
            }
            debug_assert!(samples.iter().all(|s| s.bound.is_none() || s.bound.as_ref().unwrap().len() == s.error.len()));
            per_step.push(StepMetrics {
                k,
                alive: samples.len(),
                rmse,
                rcrlb,
                nci: nci_k,
                position_rmse,
                position_rcrlb,
                position_nci,
            });
        }
        if skipped > 0 {
            log::warn!("{}: NCI skipped at {skipped} step(s) (needs two runs with nonzero error)", template.label);
        }
        let divergent_runs = tracks.iter().filter(|tr| tr.divergence.is_some()).count();
        let boundedness = (records.len() >= MIN_BOUNDEDNESS_RUNS && steps >= MIN_BOUNDEDNESS_HORIZON && divergent_runs == 0)
            .then(|| {
                let errors: Vec<Vec<DVector<f64>>> =
                    tracks.iter().map(|tr| (0..steps).map(|k| tr.error(k).expect("alive run")).collect()).collect();
                boundedness_probe(&errors).ok().map(|r| BoundednessSummary {
                    eta: r.eta,
                    lambda: r.lambda,
                    nu: r.nu,
                    pass: r.pass,
                })
            })
            .flatten();
        let rkhs = tracks
            .iter()
            .filter_map(|tr| tr.rkhs.as_ref())
            .fold(None, |acc, d| Some(merge_rkhs(acc, d)));
        let later = || per_step.iter().skip(1);
        summaries.push(FilterSummary {
            label: template.label.clone(),
            role: template.role,
            runs: records.len(),
            divergent_runs,
            divergence_rate: divergent_runs as f64 / records.len() as f64,
            rmse: time_average(later().map(|s| s.rmse)),
            rcrlb: time_average(later().map(|s| s.rcrlb)),
            nci: time_average(later().map(|s| s.nci)),
            position_rmse: time_average(later().map(|s| s.position_rmse)),
            position_rcrlb: time_average(later().map(|s| s.position_rcrlb)),
            position_nci: time_average(later().map(|s| s.position_nci)),
            nci_skipped_steps: skipped,
            boundedness,
            rkhs,
        });
        all_steps.push(per_step);
    }
    (summaries, all_steps)
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

/// Long-format header for a state of dimension `n_x`.
pub fn csv_header(n_x: usize) -> String {
    let mut cols = vec!["run_id".to_string(), "seed".into(), "k".into(), "filter".into()];
    cols.extend((0..n_x).map(|i| format!("truth_{i}")));
    cols.extend((0..n_x).map(|i| format!("est_{i}")));
    for c in ["cov_trace", "err_norm", "rmse_k", "rcrlb_k", "nci_k", "divergent", "config_hash"] {
        cols.push(c.into());
    }
    cols.join(",")
}

/// One row per run × filter × step. Missing values are empty cells.
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = csv_header(result.n_x);
    out.push('\n');
    let hash = &result.config_hash[..16];
    for record in &result.records {
        for (t, track) in record.tracks.iter().enumerate() {
            let metrics = &result.steps[t];
            for k in 0..=result.horizon {
                let m = &metrics[k];
                let divergent = track.divergence.as_ref().is_some_and(|d| k >= d.step);
                let _ = write!(out, "{},{},{},{}", record.run_id, record.seed, k, track.label);
                for src in [&track.reference[k], &track.estimates[k]] {
                    for i in 0..result.n_x {
                        let _ = write!(out, ",{}", cell(src.as_ref().map(|v| v[i])));
                    }
                }
                let _ = writeln!(
                    out,
                    ",{},{},{},{},{},{},{}",
                    cell(track.covariances[k].as_ref().map(|c| c.trace())),
                    cell(track.error(k).map(|e| e.norm())),
                    cell(m.rmse),
                    cell(m.rcrlb),
                    cell(m.nci),
                    u8::from(divergent),
                    hash
                );
            }
        }
    }
    out
}

pub const STEPS_HEADER: &str = "filter,k,alive,rmse,rcrlb,nci,position_rmse,position_rcrlb,position_nci";

/// One row per filter × step with the cross-run metrics.
pub fn render_steps_csv(result: &ExperimentResult) -> String {
    let mut out = format!("{STEPS_HEADER}\n");
    for (summary, steps) in result.summaries.iter().zip(&result.steps) {
        for m in steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                summary.label,
                m.k,
                m.alive,
                cell(m.rmse),
                cell(m.rcrlb),
                cell(m.nci),
                cell(m.position_rmse),
                cell(m.position_rcrlb),
                cell(m.position_nci)
            );
        }
    }
    out
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    scenario: &'a str,
    runs: usize,
    horizon: usize,
    filters: &'a [FilterSummary],
    wall_clock_seconds: f64,
}

pub fn render_summary_json(result: &ExperimentResult) -> String {
    let doc = SummaryDocument {
        config: &result.config,
        config_hash: &result.config_hash,
        scenario: &result.scenario,
        runs: result.runs,
        horizon: result.horizon,
        filters: &result.summaries,
        wall_clock_seconds: result.wall_clock_seconds,
    };
    serde_json::to_string_pretty(&doc).expect("summary serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

/// Writes `records.csv` + `steps.csv` and/or `summary.json` into `dir`.
pub fn emit_results(result: &ExperimentResult, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, ExperimentError> {
    if result.records.is_empty() {
        return Err(ExperimentError::Io("no records to write".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        files.push(("records.csv", render_csv(result)));
        files.push(("steps.csv", render_steps_csv(result)));
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        files.push(("summary.json", render_summary_json(result)));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
