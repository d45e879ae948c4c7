//! The attacker's forward unscented Kalman filter.
//!
//! Each step draws two sigma sets: one around the posterior for the time
//! update through `f`, and a fresh one around the prediction for the
//! measurement update through `h`.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{solve_right_spd, symmetrize, JitterPolicy};
use crate::model::AdversarialScenario;
use crate::sigma::{generate_sigma_points, unscented_transform};

#[derive(Debug, Clone, PartialEq)]
pub struct UkfState {
    pub belief: GaussianBelief,
    pub kappa: f64,
    pub step_index: usize,
}

impl UkfState {
    pub fn new(belief: GaussianBelief, kappa: f64) -> Self {
        Self {
            belief,
            kappa,
            step_index: 0,
        }
    }
}

/// Intermediate quantities of one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct UkfStepTrace {
    pub predicted: GaussianBelief,
    pub predicted_obs_mean: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub cross_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    /// Largest square-root jitter used by either sigma set.
    pub max_jitter: f64,
}

/// Prediction `(x̂_{k+1|k}, Σ_{k+1|k})`.
pub fn ukf_time_update(state: &UkfState, model: &AdversarialScenario) -> Result<GaussianBelief> {
    Ok(time_update_with_jitter(state, model)?.0)
}

fn time_update_with_jitter(state: &UkfState, model: &AdversarialScenario) -> Result<(GaussianBelief, f64)> {
    let sigma = generate_sigma_points(&state.belief, state.kappa)?;
    let q = model.q_at(state.step_index);
    let moments = unscented_transform(&sigma, |x| model.transition(x), Some(&q))?;
    Ok((GaussianBelief::from_parts(moments.mean, moments.cov), sigma.jitter))
}

/// Measurement update against `y`; the returned state carries `step_index`.
pub fn ukf_measurement_update(
    predicted: &GaussianBelief,
    y: &DVector<f64>,
    model: &AdversarialScenario,
    kappa: f64,
    step_index: usize,
) -> Result<(UkfState, UkfStepTrace)> {
    if y.len() != model.dims.n_y {
        return Err(FilterError::DimensionMismatch {
            expected: model.dims.n_y,
            got: y.len(),
            context: "attacker observation",
        });
    }
    let sigma = generate_sigma_points(predicted, kappa)?;
    let r = model.r_at(step_index);
    let obs = unscented_transform(&sigma, |x| model.observe(x), Some(&r))?;
    let gain = solve_right_spd(&obs.cross_cov, &obs.cov, &JitterPolicy::default())
        .ok_or(FilterError::SingularInnovation)?;

    let mean = &predicted.mean + &gain * (y - &obs.mean);
    let cov = symmetrize(&(&predicted.cov - &gain * &obs.cov * gain.transpose()));
    let state = UkfState {
        belief: GaussianBelief::from_parts(mean, cov),
        kappa,
        step_index,
    };
    let trace = UkfStepTrace {
        predicted: predicted.clone(),
        predicted_obs_mean: obs.mean,
        innovation_cov: obs.cov,
        cross_cov: obs.cross_cov,
        gain,
        max_jitter: sigma.jitter,
    };
    Ok((state, trace))
}

/// One full recursion: time update followed by measurement update with `y_{k+1}`.
pub fn ukf_step(
    state: &UkfState,
    y: &DVector<f64>,
    model: &AdversarialScenario,
) -> Result<(UkfState, UkfStepTrace)> {
    let (predicted, jitter) = time_update_with_jitter(state, model)?;
    let (next, mut trace) = ukf_measurement_update(&predicted, y, model, state.kappa, state.step_index + 1)?;
    trace.max_jitter = trace.max_jitter.max(jitter);
    Ok((next, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{vector_map, Dims, NoiseSpec};
    use crate::sigma::sigma_generation_count;
    use nalgebra::{dmatrix, dvector};

    fn scalar_identity_model(q: f64, r: f64) -> AdversarialScenario {
        AdversarialScenario::new(
            "scalar",
            Dims { n_x: 1, n_y: 1, n_a: 1 },
            vector_map(|x| x.clone()),
            vector_map(|x| x.clone()),
            vector_map(|x| x.clone()),
            NoiseSpec {
                q: dmatrix![q],
                r: dmatrix![r],
                sigma_eps: dmatrix![1.0],
            },
        )
    }

    #[test]
    fn identity_without_noise_keeps_prior() {
        let model = scalar_identity_model(0.0, 1.0);
        let state = UkfState::new(GaussianBelief::new(dvector![0.7], dmatrix![2.0]).unwrap(), 2.0);
        let pred = ukf_time_update(&state, &model).unwrap();
        assert!((pred.mean[0] - 0.7).abs() < 1e-10);
        assert!((pred.cov[(0, 0)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn scalar_hand_kalman_step() {
        // prior var 1 + Q 1 = 2; gain 2/3; posterior var 2 - 4/3 = 2/3
        let model = scalar_identity_model(1.0, 1.0);
        let state = UkfState::new(GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap(), 2.0);
        let (next, trace) = ukf_step(&state, &dvector![1.0], &model).unwrap();
        assert!((next.belief.mean[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((next.belief.cov[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((trace.gain[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(next.step_index, 1);
    }

    #[test]
    fn huge_measurement_noise_leaves_mean() {
        let mut model = scalar_identity_model(0.1, 1.0);
        model.noise.r = dmatrix![1e12];
        let state = UkfState::new(GaussianBelief::new(dvector![3.0], dmatrix![1.0]).unwrap(), 1.0);
        let pred = ukf_time_update(&state, &model).unwrap();
        let (next, _) = ukf_measurement_update(&pred, &dvector![100.0], &model, 1.0, 1).unwrap();
        assert!(((next.belief.mean[0] - pred.mean[0]) / pred.mean[0]).abs() < 1e-4);
    }

    #[test]
    fn two_sigma_sets_per_step() {
        let model = scalar_identity_model(1.0, 1.0);
        let state = UkfState::new(GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap(), 2.0);
        let before = sigma_generation_count();
        ukf_step(&state, &dvector![0.5], &model).unwrap();
        assert_eq!(sigma_generation_count() - before, 2);
    }

    #[test]
    fn wrong_observation_dimension() {
        let model = scalar_identity_model(1.0, 1.0);
        let state = UkfState::new(GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap(), 2.0);
        assert!(matches!(
            ukf_step(&state, &dvector![0.5, 1.0], &model),
            Err(FilterError::DimensionMismatch { .. })
        ));
    }
}
