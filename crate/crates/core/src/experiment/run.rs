//! Seeded Monte-Carlo execution of truth, attacker filters and defender filters.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::FilterError;
use crate::gaussian::GaussianBelief;
use crate::iukf::{iukf_step, EstimateRun, IukfState};
use crate::linalg::{min_eigenvalue, spectral_norm};
use crate::metrics::{finite_difference_jacobian, inverse_transition_jacobian, rcrlb_for_inverse, rcrlb_trajectory, FisherInfo};
use crate::rkhs::{rkhs_init, rkhs_step, RkhsSettings, RkhsUkfState};
use crate::scenarios::noise::run_seed;
use crate::scenarios::{inverse_initial_mean, simulate_truth, DefenderChannel, Trajectory};
use crate::ukf::{ukf_step, UkfState};

use super::config::{ConfigError, DivergenceConfig, ExperimentPlan, ForwardKind, InverseKind};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure in run {run} at step {step} ({context}): {source}")]
    Numerical {
        run: usize,
        step: usize,
        context: String,
        source: FilterError,
    },
    #[error("i/o failure: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub step: usize,
    pub reason: String,
}

/// Worst-case parameter statistics of a kernel filter over one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RkhsDiagnostics {
    pub max_a_norm: f64,
    pub max_b_norm: f64,
    pub min_q_eig: f64,
    pub min_r_eig: f64,
    pub max_dictionary_len: usize,
    pub floor_triggers: usize,
    /// Column counts of `Â`, `B̂` matched the dictionary length at every step.
    pub columns_consistent: bool,
}

/// One filter's outputs along one run; index `k` holds step `k`.
#[derive(Debug, Clone)]
pub struct FilterTrack {
    pub label: String,
    pub role: Role,
    /// Quantity being estimated: the true state, or the attacker's estimate.
    pub reference: Vec<Option<DVector<f64>>>,
    pub estimates: Vec<Option<DVector<f64>>>,
    pub covariances: Vec<Option<DMatrix<f64>>>,
    /// Diagonal of `J⁻¹`.
    pub bound: Vec<Option<DVector<f64>>>,
    pub divergence: Option<Divergence>,
    pub rkhs: Option<RkhsDiagnostics>,
}

impl FilterTrack {
    fn new(label: String, role: Role, steps: usize) -> Self {
        Self {
            label,
            role,
            reference: vec![None; steps],
            estimates: vec![None; steps],
            covariances: vec![None; steps],
            bound: vec![None; steps],
            divergence: None,
            rkhs: None,
        }
    }

    /// Reference, estimate and covariance sequences when the track never stopped.
    pub fn to_estimate_run(&self) -> Option<EstimateRun> {
        Some(EstimateRun {
            truth: self.reference.iter().cloned().collect::<Option<Vec<_>>>()?,
            estimates: self.estimates.iter().cloned().collect::<Option<Vec<_>>>()?,
            covariances: self.covariances.iter().cloned().collect::<Option<Vec<_>>>()?,
        })
    }

    /// `reference − estimate` where both exist.
    pub fn error(&self, k: usize) -> Option<DVector<f64>> {
        match (&self.reference[k], &self.estimates[k]) {
            (Some(r), Some(e)) => Some(r - e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub tracks: Vec<FilterTrack>,
}

pub fn forward_label(kind: ForwardKind) -> String {
    kind.label().to_string()
}

pub fn inverse_label(kind: InverseKind, forward: ForwardKind) -> String {
    format!("{}@{}", kind.label(), forward.label())
}

fn divergence_reason(mean: &DVector<f64>, cov: &DMatrix<f64>, limits: &DivergenceConfig) -> Option<String> {
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        Some("non-finite estimate".into())
    } else if mean.norm() > limits.state_norm {
        Some(format!("estimate norm {} exceeds {}", mean.norm(), limits.state_norm))
    } else if cov.trace() > limits.cov_trace {
        Some(format!("covariance trace {} exceeds {}", cov.trace(), limits.cov_trace))
    } else {
        None
    }
}

struct RunContext<'a> {
    plan: &'a ExperimentPlan,
    run_id: usize,
    seed: u64,
}

impl RunContext<'_> {
    fn steps(&self) -> usize {
        self.plan.horizon + 1
    }

    /// Records a divergence; in strict mode it becomes a hard error.
    fn diverge(&self, track: &mut FilterTrack, step: usize, reason: String, source: Option<FilterError>) -> Result<(), ExperimentError> {
        if self.plan.divergence.strict {
            return Err(ExperimentError::Numerical {
                run: self.run_id,
                step,
                context: format!("{}: {reason}", track.label),
                source: source.unwrap_or(FilterError::InvalidBelief(reason)),
            });
        }
        log::debug!("run {} {} diverged at step {step}: {reason}", self.run_id, track.label);
        track.divergence = Some(Divergence { step, reason });
        Ok(())
    }

    /// Stores an accepted estimate or flags divergence; returns whether the filter continues.
    fn accept(
        &self,
        track: &mut FilterTrack,
        k: usize,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    ) -> Result<bool, ExperimentError> {
        if let Some(reason) = divergence_reason(&mean, &cov, &self.plan.divergence) {
            self.diverge(track, k, reason, None)?;
            return Ok(false);
        }
        track.estimates[k] = Some(mean);
        track.covariances[k] = Some(cov);
        Ok(true)
    }
}

/// Forward UKF gains and posteriors needed by the inverse bound.
struct ForwardUkfLog {
    gains: Vec<Option<DMatrix<f64>>>,
}

fn run_forward_ukf(ctx: &RunContext, truth: &Trajectory, track: &mut FilterTrack) -> Result<ForwardUkfLog, ExperimentError> {
    let plan = ctx.plan;
    let model = &plan.scenario.model;
    let init = &plan.scenario.defaults.initial.forward;
    let mut gains = vec![None; ctx.steps()];
    let mut state = UkfState::new(init.clone(), plan.forward_kappa);
    if !ctx.accept(track, 0, init.mean.clone(), init.cov.clone())? {
        return Ok(ForwardUkfLog { gains });
    }
    for k in 1..ctx.steps() {
        match ukf_step(&state, &truth.observations[k], model) {
            Ok((next, trace)) => {
                if !ctx.accept(track, k, next.belief.mean.clone(), next.belief.cov.clone())? {
                    break;
                }
                gains[k] = Some(trace.gain);
                state = next;
            }
            Err(e) => {
                ctx.diverge(track, k, e.to_string(), Some(e))?;
                break;
            }
        }
    }
    Ok(ForwardUkfLog { gains })
}

fn update_diagnostics(diag: &mut RkhsDiagnostics, s: &RkhsUkfState) {
    let p = &s.params;
    diag.max_a_norm = diag.max_a_norm.max(spectral_norm(&p.a));
    diag.max_b_norm = diag.max_b_norm.max(spectral_norm(&p.b));
    diag.min_q_eig = diag.min_q_eig.min(min_eigenvalue(&p.q));
    diag.min_r_eig = diag.min_r_eig.min(min_eigenvalue(&p.r));
    diag.max_dictionary_len = diag.max_dictionary_len.max(s.dict.len());
    diag.floor_triggers = p.floor_triggers;
    diag.columns_consistent &= p.a.ncols() == s.dict.len() && p.b.ncols() == s.dict.len();
}

/// Runs a kernel filter on `observations[1..]` starting from `init`.
fn run_rkhs(
    ctx: &RunContext,
    init: &GaussianBelief,
    observations: &[Option<DVector<f64>>],
    n_y: usize,
    settings: &RkhsSettings,
    track: &mut FilterTrack,
) -> Result<(), ExperimentError> {
    let n_x = init.dim();
    let start = rkhs_init(init, n_y, DMatrix::identity(n_x, n_x), DMatrix::identity(n_y, n_y), settings);
    let mut state = match start {
        Ok(s) => s,
        Err(e) => return ctx.diverge(track, 0, e.to_string(), Some(e)),
    };
    let mut diag = RkhsDiagnostics {
        max_a_norm: 0.0,
        max_b_norm: 0.0,
        min_q_eig: f64::INFINITY,
        min_r_eig: f64::INFINITY,
        max_dictionary_len: 0,
        floor_triggers: 0,
        columns_consistent: true,
    };
    update_diagnostics(&mut diag, &state);
    if ctx.accept(track, 0, state.estimate(), state.estimate_cov())? {
        for k in 1..ctx.steps() {
            let Some(y) = &observations[k] else { break };
            match rkhs_step(&state, y) {
                Ok((next, _)) => {
                    update_diagnostics(&mut diag, &next);
                    let cov = next.estimate_cov();
                    let mean = next.estimate();
                    state = next;
                    if !ctx.accept(track, k, mean, cov)? {
                        break;
                    }
                }
                Err(e) => {
                    ctx.diverge(track, k, e.to_string(), Some(e))?;
                    break;
                }
            }
        }
    }
    track.rkhs = Some(diag);
    Ok(())
}

fn bound_diagonal(info: &FisherInfo) -> Option<DVector<f64>> {
    Some(info.bound_matrix().diagonal())
}

/// Inverse-filter RCRLB along the attacker's actual UKF trajectory.
fn inverse_bound(ctx: &RunContext, truth: &Trajectory, forward: &FilterTrack, log: &ForwardUkfLog) -> Vec<Option<DVector<f64>>> {
    let plan = ctx.plan;
    let model = &plan.scenario.model;
    let mut out = vec![None; ctx.steps()];
    let Ok(mut info) = FisherInfo::from_covariance(&plan.scenario.defaults.initial.inverse_cov) else {
        log::warn!("inverse initial covariance is singular; inverse RCRLB skipped");
        return out;
    };
    out[0] = bound_diagonal(&info);
    for k in 1..ctx.steps() {
        let (Some(x_prev), Some(cov_prev), Some(x_hat), Some(cov), Some(gain)) = (
            &forward.estimates[k - 1],
            &forward.covariances[k - 1],
            &forward.estimates[k],
            &forward.covariances[k],
            &log.gains[k],
        ) else {
            break;
        };
        let f_tilde = match inverse_transition_jacobian(model, x_prev, cov_prev, &truth.states[k], plan.forward_kappa, k - 1) {
            Ok(f) => f,
            Err(e) => {
                log::debug!("run {}: inverse RCRLB stopped at step {k} ({e})", ctx.run_id);
                break;
            }
        };
        let g = match &model.jacobians.g {
            Some(j) => j(x_hat),
            None => finite_difference_jacobian(|p| model.defender_observe(p, cov), x_hat),
        };
        match rcrlb_for_inverse(&info, &f_tilde, &g, gain, &model.r_at(k), &model.noise.sigma_eps) {
            Ok(next) => {
                out[k] = bound_diagonal(&next);
                info = next;
            }
            Err(e) => {
                log::debug!("run {}: inverse RCRLB stopped at step {k} ({e})", ctx.run_id);
                break;
            }
        }
    }
    out
}

fn run_single(plan: &ExperimentPlan, run_id: usize) -> Result<RunRecord, ExperimentError> {
    let seed = run_seed(plan.seed, run_id as u64);
    let ctx = RunContext { plan, run_id, seed };
    let model = &plan.scenario.model;
    let init = &plan.scenario.defaults.initial;
    let steps = ctx.steps();
    let numerical = |step, context: &str, source| ExperimentError::Numerical {
        run: run_id,
        step,
        context: context.to_string(),
        source,
    };
    let truth = simulate_truth(&plan.scenario.truth_model(), &init.truth, plan.horizon, seed).map_err(|e| numerical(0, "truth simulation", e))?;
    let reference: Vec<Option<DVector<f64>>> = truth.states.iter().cloned().map(Some).collect();

    let forward_bound = if plan.rcrlb {
        match rcrlb_trajectory(model, &truth.states, &init.forward.cov) {
            Ok(infos) => infos.iter().map(bound_diagonal).collect(),
            Err(e) => {
                log::warn!("run {run_id}: forward RCRLB unavailable ({e})");
                vec![None; steps]
            }
        }
    } else {
        vec![None; steps]
    };
    let inverse_start = inverse_initial_mean(&init.inverse_mean, &init.forward.mean, seed)
        .map_err(|e| numerical(0, "inverse initial estimate", e))?;
    let inverse_prior = GaussianBelief::new(inverse_start, init.inverse_cov.clone())
        .map_err(|e| numerical(0, "inverse initial belief", e))?;

    let mut tracks = Vec::new();
    for (channel, &fk) in plan.forward_filters.iter().enumerate() {
        let mut forward = FilterTrack::new(forward_label(fk), Role::Forward, steps);
        forward.reference = reference.clone();
        forward.bound = forward_bound.clone();
        let ukf_log = match fk {
            ForwardKind::Ukf => Some(run_forward_ukf(&ctx, &truth, &mut forward)?),
            ForwardKind::RkhsUkf => {
                let observations: Vec<Option<DVector<f64>>> = truth.observations.iter().cloned().map(Some).collect();
                let settings = &plan.rkhs.as_ref().expect("resolved kernel settings").forward;
                run_rkhs(&ctx, &init.forward, &observations, model.dims.n_y, settings, &mut forward)?;
                None
            }
        };

        let mut defender = DefenderChannel::new(model, seed, channel as u64).map_err(|e| numerical(0, "defender noise", e))?;
        let actions: Vec<Option<DVector<f64>>> = (0..steps)
            .map(|k| match (&forward.estimates[k], &forward.covariances[k]) {
                (Some(x), Some(c)) if k > 0 => Some(defender.observe(model, x, c)),
                _ => None,
            })
            .collect();

        let bound = match (&ukf_log, plan.rcrlb && !plan.inverse_filters.is_empty()) {
            (Some(log), true) => inverse_bound(&ctx, &truth, &forward, log),
            _ => vec![None; steps],
        };

        let mut inverse_tracks = Vec::new();
        for &ik in &plan.inverse_filters {
            let mut track = FilterTrack::new(inverse_label(ik, fk), Role::Inverse, steps);
            track.reference = forward.estimates.clone();
            track.bound = bound.clone();
            match ik {
                InverseKind::Iukf => run_inverse_ukf(&ctx, &truth, &actions, &inverse_prior, &mut track)?,
                InverseKind::RkhsUkf => {
                    let settings = &plan.rkhs.as_ref().expect("resolved kernel settings").inverse;
                    run_rkhs(&ctx, &inverse_prior, &actions, model.dims.n_a, settings, &mut track)?;
                }
            }
            inverse_tracks.push(track);
        }
        tracks.push(forward);
        tracks.extend(inverse_tracks);
    }
    Ok(RunRecord {
        run_id,
        seed: ctx.seed,
        tracks,
    })
}

fn run_inverse_ukf(
    ctx: &RunContext,
    truth: &Trajectory,
    actions: &[Option<DVector<f64>>],
    prior: &GaussianBelief,
    track: &mut FilterTrack,
) -> Result<(), ExperimentError> {
    let plan = ctx.plan;
    let mut state = IukfState::new(prior.clone(), plan.kappa_bar, plan.assumed_forward_kappa);
    state.averaging = plan.averaging;
    if let Some(s0) = &plan.sigma_star0 {
        state.sigma_star = s0.clone();
    }
    if !ctx.accept(track, 0, prior.mean.clone(), prior.cov.clone())? {
        return Ok(());
    }
    for k in 1..ctx.steps() {
        let Some(a) = &actions[k] else { break };
        match iukf_step(&state, a, &truth.states[k], &plan.scenario.model) {
            Ok((next, _)) => {
                if !ctx.accept(track, k, next.belief.mean.clone(), next.belief.cov.clone())? {
                    break;
                }
                state = next;
            }
            Err(e) => {
                ctx.diverge(track, k, e.to_string(), Some(e))?;
                break;
            }
        }
    }
    Ok(())
}

/// Executes every run, in parallel when `workers` allows, returning records
/// ordered by run id. The first failing run (by id) determines the error.
pub fn execute_runs(plan: &ExperimentPlan, workers: Option<usize>) -> Result<Vec<RunRecord>, ExperimentError> {
    let work = || (0..plan.runs).into_par_iter().map(|m| run_single(plan, m)).collect::<Vec<_>>();
    let results = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ExperimentError::Io(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    results.into_iter().collect()
}
