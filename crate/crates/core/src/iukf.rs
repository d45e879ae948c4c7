//! The defender's inverse UKF.
//!
//! The defender knows its own true states `x_k` and observes the attacker's
//! actions `a_k = g(x̂_k) + ε_k`. The attacker's forward UKF update is itself a
//! transition `x̂_{k+1} = f̃(x̂_k, Σ_k, x_{k+1}, v_{k+1})` with non-additive noise
//! `v_{k+1}`, so the inverse filter runs on the augmented state
//! `z = [x̂ᵀ, vᵀ]ᵀ` with covariance `blockdiag(Σ̄, R)`. The attacker's `Σ_k` is
//! replaced by a surrogate `Σ*_k`: the mean of the forward covariance updates
//! obtained while propagating each augmented sigma point.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{block_diag, min_eigenvalue, solve_right_spd, stack, symmetrize, JitterPolicy};
use crate::model::AdversarialScenario;
use crate::sigma::{generate_sigma_points, sigma_generation_count, weighted_mean, weighted_moments};
use crate::ukf::{ukf_step, UkfState};

/// How the per-sigma-point forward covariances are combined into `Σ*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaStarAveraging {
    /// Plain arithmetic mean over all `2n_z + 1` points.
    #[default]
    Uniform,
    /// Mean weighted by the inverse filter's sigma weights.
    SigmaWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IukfState {
    /// Belief over the attacker's estimate `x̂_k`.
    pub belief: GaussianBelief,
    /// Surrogate for the attacker's error covariance `Σ_k`.
    pub sigma_star: DMatrix<f64>,
    pub kappa_bar: f64,
    pub assumed_forward_kappa: f64,
    pub averaging: SigmaStarAveraging,
    pub step_index: usize,
}

impl IukfState {
    /// Starts with `Σ*_0 = Σ̄_0`.
    pub fn new(belief: GaussianBelief, kappa_bar: f64, assumed_forward_kappa: f64) -> Self {
        let sigma_star = belief.cov.clone();
        Self {
            belief,
            sigma_star,
            kappa_bar,
            assumed_forward_kappa,
            averaging: SigmaStarAveraging::Uniform,
            step_index: 0,
        }
    }
}

/// Augmented belief `ẑ = [x̂̂ᵀ, 0ᵀ]ᵀ`, `Σ̄ᶻ = blockdiag(Σ̄, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBelief {
    pub z_mean: DVector<f64>,
    pub z_cov: DMatrix<f64>,
}

impl AugmentedBelief {
    pub fn build(belief: &GaussianBelief, r: &DMatrix<f64>) -> Self {
        Self {
            z_mean: stack(&belief.mean, &DVector::zeros(r.nrows())),
            z_cov: block_diag(&belief.cov, r),
        }
    }
}

/// Result of pushing one augmented point through the attacker's forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOutput {
    pub x_hat_next: DVector<f64>,
    /// Forward covariance update `Σ̃` computed along the way.
    pub sigma_tilde: DMatrix<f64>,
    /// Forward gain `K_{k+1}`.
    pub gain: DMatrix<f64>,
}

/// Runs one forward-UKF step seeded at `(z[..n_x], Σ*)` with the synthetic
/// observation `h(x_{k+1}) + z[n_x..]`.
pub fn iukf_transition(
    z_point: &DVector<f64>,
    sigma_star: &DMatrix<f64>,
    x_next: &DVector<f64>,
    model: &AdversarialScenario,
    assumed_forward_kappa: f64,
    step_index: usize,
) -> Result<TransitionOutput> {
    let n_x = model.dims.n_x;
    let n_z = n_x + model.dims.n_y;
    if z_point.len() != n_z {
        return Err(FilterError::DimensionMismatch {
            expected: n_z,
            got: z_point.len(),
            context: "augmented inverse state",
        });
    }
    let x_hat = z_point.rows(0, n_x).into_owned();
    let noise = z_point.rows(n_x, model.dims.n_y).into_owned();
    let forward = UkfState {
        belief: GaussianBelief::from_parts(x_hat, sigma_star.clone()),
        kappa: assumed_forward_kappa,
        step_index,
    };
    let y = model.observe(x_next) + noise;
    let (next, trace) = ukf_step(&forward, &y, model)?;
    Ok(TransitionOutput {
        x_hat_next: next.belief.mean,
        sigma_tilde: next.belief.cov,
        gain: trace.gain,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IukfTrace {
    pub augmented: AugmentedBelief,
    pub predicted: GaussianBelief,
    pub predicted_action_mean: DVector<f64>,
    pub action_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    /// Forward gain obtained at the central sigma point.
    pub forward_gain: DMatrix<f64>,
    /// Sigma sets generated by the inverse filter itself.
    pub sigma_sets: u64,
    /// Sigma sets generated inside the nested forward steps.
    pub nested_sigma_sets: u64,
}

/// One inverse recursion with defender observation `a_{k+1}` and true state `x_{k+1}`.
pub fn iukf_step(
    state: &IukfState,
    a_next: &DVector<f64>,
    x_next: &DVector<f64>,
    model: &AdversarialScenario,
) -> Result<(IukfState, IukfTrace)> {
    let n_x = model.dims.n_x;
    if a_next.len() != model.dims.n_a {
        return Err(FilterError::DimensionMismatch {
            expected: model.dims.n_a,
            got: a_next.len(),
            context: "defender observation",
        });
    }
    let k = state.step_index;
    let augmented = AugmentedBelief::build(&state.belief, &model.r_at(k + 1));
    let z_belief = GaussianBelief::from_parts(augmented.z_mean.clone(), augmented.z_cov.clone());

    let count_start = sigma_generation_count();
    let sigma = generate_sigma_points(&z_belief, state.kappa_bar)?;
    let count_own = sigma_generation_count();

    let mut propagated = Vec::with_capacity(sigma.len());
    let mut tildes = Vec::with_capacity(sigma.len());
    let mut forward_gain = DMatrix::zeros(0, 0);
    for (j, point) in sigma.points.iter().enumerate() {
        let out = iukf_transition(point, &state.sigma_star, x_next, model, state.assumed_forward_kappa, k)
            .map_err(|e| FilterError::ForwardStep {
                index: j,
                source: Box::new(e),
            })?;
        if j == 0 {
            forward_gain = out.gain;
        }
        propagated.push(out.x_hat_next);
        tildes.push(out.sigma_tilde);
    }
    let nested = sigma_generation_count() - count_own;

    let sigma_star_next = match state.averaging {
        SigmaStarAveraging::Uniform => {
            let mut acc = DMatrix::zeros(n_x, n_x);
            for t in &tildes {
                acc += t;
            }
            acc / tildes.len() as f64
        }
        SigmaStarAveraging::SigmaWeights => {
            let mut acc = DMatrix::zeros(n_x, n_x);
            for (w, t) in sigma.weights.iter().zip(&tildes) {
                acc += t * *w;
            }
            acc
        }
    };
    let sigma_star_next = symmetrize(&sigma_star_next);

    // time update: the noise entered through the augmentation, no additive term
    let pred_mean = weighted_mean(&sigma.weights, &propagated);
    let mut pred_cov = DMatrix::zeros(n_x, n_x);
    for (w, p) in sigma.weights.iter().zip(&propagated) {
        let d = p - &pred_mean;
        pred_cov.ger(*w, &d, &d, 1.0);
    }
    let predicted = GaussianBelief::from_parts(pred_mean, pred_cov);

    // measurement update through g on the propagated points
    let actions: Vec<DVector<f64>> = propagated
        .iter()
        .map(|p| model.defender_observe(p, &sigma_star_next))
        .collect();
    let moments = weighted_moments(&sigma.weights, &propagated, &actions, Some(&model.noise.sigma_eps))?;
    let gain = solve_right_spd(&moments.cross_cov, &moments.cov, &JitterPolicy::default())
        .ok_or(FilterError::SingularInnovation)?;
    let mean = &predicted.mean + &gain * (a_next - &moments.mean);
    let cov = symmetrize(&(&predicted.cov - &gain * &moments.cov * gain.transpose()));

    let next = IukfState {
        belief: GaussianBelief::from_parts(mean, cov),
        sigma_star: sigma_star_next,
        kappa_bar: state.kappa_bar,
        assumed_forward_kappa: state.assumed_forward_kappa,
        averaging: state.averaging,
        step_index: k + 1,
    };
    let trace = IukfTrace {
        augmented,
        predicted,
        predicted_action_mean: moments.mean,
        action_cov: moments.cov,
        gain,
        forward_gain,
        sigma_sets: count_own - count_start,
        nested_sigma_sets: nested,
    };
    Ok((next, trace))
}

/// One Monte-Carlo run as seen by the conservativeness probe.
#[derive(Debug, Clone)]
pub struct EstimateRun {
    /// Quantity being estimated (for the inverse filter: the attacker's `x̂_k`).
    pub truth: Vec<DVector<f64>>,
    pub estimates: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepGap {
    pub k: usize,
    /// Minimum eigenvalue of `mean Σ̄_k − P̂_k`.
    pub min_eig_gap: f64,
    pub tau: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservativenessReport {
    pub steps: Vec<StepGap>,
}

impl ConservativenessReport {
    pub fn pass(&self) -> bool {
        self.steps.iter().all(|s| s.pass)
    }

    pub fn first_failure(&self) -> Option<&StepGap> {
        self.steps.iter().find(|s| !s.pass)
    }
}

pub const MIN_PROBE_RUNS: usize = 100;

/// Compares the mean reported covariance against the sample error second
/// moment `P̂_k = mean(x̃ x̃ᵀ)` at every step. A step passes when the minimum
/// eigenvalue of the gap is at least `-0.05 · tr(mean Σ̄_k) / n`.
pub fn conservativeness_probe(runs: &[EstimateRun]) -> Result<ConservativenessReport> {
    if runs.len() < MIN_PROBE_RUNS {
        return Err(FilterError::InsufficientRuns {
            required: MIN_PROBE_RUNS,
            got: runs.len(),
        });
    }
    let horizon = runs.iter().map(|r| r.estimates.len().min(r.truth.len()).min(r.covariances.len())).min().unwrap_or(0);
    if horizon == 0 {
        return Err(FilterError::EmptyInput);
    }
    let n = runs[0].estimates[0].len();
    let m = runs.len() as f64;
    let steps = (0..horizon)
        .map(|k| {
            let mut mean_cov = DMatrix::zeros(n, n);
            let mut mse = DMatrix::zeros(n, n);
            for run in runs {
                mean_cov += &run.covariances[k];
                let e = &run.truth[k] - &run.estimates[k];
                mse.ger(1.0, &e, &e, 1.0);
            }
            mean_cov /= m;
            mse /= m;
            let min_eig_gap = min_eigenvalue(&(&mean_cov - mse));
            let tau = 0.05 * mean_cov.trace() / n as f64;
            StepGap {
                k,
                min_eig_gap,
                tau,
                pass: min_eig_gap >= -tau,
            }
        })
        .collect();
    Ok(ConservativenessReport { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{vector_map, Dims, NoiseSpec};
    use nalgebra::{dmatrix, dvector};

    fn scalar_model(eps: f64) -> AdversarialScenario {
        AdversarialScenario::new(
            "scalar",
            Dims { n_x: 1, n_y: 1, n_a: 1 },
            vector_map(|x| x * 0.9),
            vector_map(|x| x.map(|v| v + 0.1 * v * v)),
            vector_map(|x| x.map(|v| v * v * 0.5 + v)),
            NoiseSpec {
                q: dmatrix![0.2],
                r: dmatrix![0.5],
                sigma_eps: dmatrix![eps],
            },
        )
    }

    #[test]
    fn augmented_block_structure() {
        let b = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![1.0, 0.2; 0.2, 2.0]).unwrap();
        let r = dmatrix![3.0];
        let aug = AugmentedBelief::build(&b, &r);
        assert_eq!(aug.z_mean, dvector![1.0, 2.0, 0.0]);
        assert_eq!(aug.z_cov, dmatrix![1.0, 0.2, 0.0; 0.2, 2.0, 0.0; 0.0, 0.0, 3.0]);
    }

    #[test]
    fn zero_innovation_returns_prediction() {
        // pick x_next so that h(x_next) equals the predicted observation mean
        let model = AdversarialScenario::new(
            "lin",
            Dims { n_x: 1, n_y: 1, n_a: 1 },
            vector_map(|x| x * 0.9),
            vector_map(|x| x * 2.0),
            vector_map(|x| x.clone()),
            NoiseSpec { q: dmatrix![0.2], r: dmatrix![0.5], sigma_eps: dmatrix![1.0] },
        );
        let z = dvector![1.0, 0.0];
        let x_next = dvector![0.9];
        let out = iukf_transition(&z, &dmatrix![1.0], &x_next, &model, 2.0, 0).unwrap();
        assert!((out.x_hat_next[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn uninformative_defender_observation() {
        let model = scalar_model(1e12);
        let state = IukfState::new(GaussianBelief::new(dvector![0.5], dmatrix![1.0]).unwrap(), 1.0, 2.0);
        let (next, trace) = iukf_step(&state, &dvector![50.0], &dvector![0.3], &model).unwrap();
        let pred = trace.predicted.mean[0];
        assert!(((next.belief.mean[0] - pred) / pred).abs() < 1e-4);
    }

    #[test]
    fn one_own_sigma_set_per_step() {
        let model = scalar_model(1.0);
        let state = IukfState::new(GaussianBelief::new(dvector![0.5], dmatrix![1.0]).unwrap(), 1.0, 2.0);
        let before = sigma_generation_count();
        let (_, trace) = iukf_step(&state, &dvector![0.4], &dvector![0.3], &model).unwrap();
        assert_eq!(trace.sigma_sets, 1);
        // n_z = 2 -> 5 points, two forward sets each
        assert_eq!(trace.nested_sigma_sets, 10);
        assert_eq!(sigma_generation_count() - before, 11);
    }

    #[test]
    fn probe_needs_enough_runs() {
        let run = EstimateRun {
            truth: vec![dvector![0.0]],
            estimates: vec![dvector![0.0]],
            covariances: vec![dmatrix![1.0]],
        };
        let err = conservativeness_probe(&vec![run; 99]).unwrap_err();
        assert_eq!(err, FilterError::InsufficientRuns { required: 100, got: 99 });
    }
}
