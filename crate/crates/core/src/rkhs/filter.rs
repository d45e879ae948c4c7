//! Joint state estimation and model learning with kernel-approximated dynamics.
//!
//! The unknown maps are represented as `x_{k+1} = A Φ(x_k) + w` and
//! `y_k = B Φ(x_k) + v`. The filter runs a UKF on `z_k = [x_kᵀ, x_{k-1}ᵀ]ᵀ` so
//! that the statistics of `Φ(x_{k-1})` given `y_k` are available to the EM
//! step. Each recursion generates exactly two sigma sets: one for the
//! measurement update and one around the posterior that serves both the
//! expectations and the next prediction.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{block_diag, solve_right_spd, stack, symmetrize, JitterPolicy};
use crate::sigma::{generate_sigma_points, unscented_transform, weighted_mean, SigmaSet};

use super::kernel::{feature_map, Dictionary, DictionaryChange, DictionaryPolicy, KernelSpec};
use super::params::{rkhs_param_update, Expectations, NormBounds, ObservationMoments, RkhsParameterEstimate};

/// Static settings of an RKHS-UKF instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsSettings {
    pub kappa: f64,
    pub kernel: KernelSpec,
    pub policy: DictionaryPolicy,
    pub bounds: NormBounds,
    /// Initial value of every entry of `Â₀` and `B̂₀`.
    pub init_fill: f64,
    pub moments: ObservationMoments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkhsUkfState {
    /// Belief over `[x_kᵀ, x_{k-1}ᵀ]ᵀ`.
    pub z_belief: GaussianBelief,
    pub params: RkhsParameterEstimate,
    pub dict: Dictionary,
    pub kernel: KernelSpec,
    pub kappa: f64,
    pub moments: ObservationMoments,
    pub step_index: usize,
    /// Sigma set around `z_belief`, reused by the next prediction.
    pub sigma: SigmaSet,
}

impl RkhsUkfState {
    pub fn state_dim(&self) -> usize {
        self.z_belief.dim() / 2
    }

    /// Current estimate `x̂_{k|k}`.
    pub fn estimate(&self) -> DVector<f64> {
        self.z_belief.mean.rows(0, self.state_dim()).into_owned()
    }

    /// Covariance block of `x̂_{k|k}`.
    pub fn estimate_cov(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        self.z_belief.cov.view((0, 0), (n, n)).into_owned()
    }

    fn transition(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.state_dim();
        let x = z.rows(0, n).into_owned();
        let next = &self.params.a * feature_map(&x, &self.dict, &self.kernel);
        stack(&next, &x)
    }

    fn observe(&self, z: &DVector<f64>) -> DVector<f64> {
        let x = z.rows(0, self.state_dim()).into_owned();
        &self.params.b * feature_map(&x, &self.dict, &self.kernel)
    }
}

/// Initial state: `ẑ₀ = [x̂₀ᵀ, x̂₀ᵀ]ᵀ`, `Σᶻ₀ = blockdiag(Σ₀, Σ₀)`, one atom at `x̂₀`.
pub fn rkhs_init(
    x0: &GaussianBelief,
    n_y: usize,
    q0: DMatrix<f64>,
    r0: DMatrix<f64>,
    settings: &RkhsSettings,
) -> Result<RkhsUkfState> {
    x0.validate()?;
    let n = x0.dim();
    let z_belief = GaussianBelief::from_parts(stack(&x0.mean, &x0.mean), block_diag(&x0.cov, &x0.cov));
    let sigma = generate_sigma_points(&z_belief, settings.kappa)?;
    Ok(RkhsUkfState {
        z_belief,
        params: RkhsParameterEstimate::new(n, n_y, 1, settings.init_fill, q0, r0, settings.bounds),
        dict: Dictionary::new(x0.mean.clone(), settings.policy),
        kernel: settings.kernel,
        kappa: settings.kappa,
        moments: settings.moments,
        step_index: 0,
        sigma,
    })
}

/// Prediction of `z_k` through `f̃(z) = [(ÂΦ(x))ᵀ, xᵀ]ᵀ` with `Q̃ = blockdiag(Q̂, 0)`,
/// using the cached sigma set.
pub fn rkhs_predict(state: &RkhsUkfState) -> Result<(GaussianBelief, &SigmaSet)> {
    let n = state.state_dim();
    let q_tilde = block_diag(&state.params.q, &DMatrix::zeros(n, n));
    let moments = unscented_transform(&state.sigma, |z| state.transition(z), Some(&q_tilde))?;
    Ok((GaussianBelief::from_parts(moments.mean, moments.cov), &state.sigma))
}

/// Measurement update of the augmented belief through `h̃(z) = B̂Φ(x)` with `R̂`.
pub fn rkhs_update(state: &RkhsUkfState, z_pred: &GaussianBelief, y: &DVector<f64>) -> Result<RkhsUkfState> {
    let n_y = state.params.b.nrows();
    if y.len() != n_y {
        return Err(FilterError::DimensionMismatch {
            expected: n_y,
            got: y.len(),
            context: "rkhs observation",
        });
    }
    let sigma = generate_sigma_points(z_pred, state.kappa)?;
    let obs = unscented_transform(&sigma, |z| state.observe(z), Some(&state.params.r))?;
    let gain = solve_right_spd(&obs.cross_cov, &obs.cov, &JitterPolicy::default())
        .ok_or(FilterError::SingularInnovation)?;
    let mean = &z_pred.mean + &gain * (y - &obs.mean);
    let cov = symmetrize(&(&z_pred.cov - &gain * &obs.cov * gain.transpose()));
    let mut next = state.clone();
    next.z_belief = GaussianBelief::from_parts(mean, cov);
    next.step_index += 1;
    Ok(next)
}

/// Expectations for the EM step from a fresh sigma set around the posterior.
/// The set is returned so the next prediction can reuse it.
pub fn rkhs_expectations(state: &RkhsUkfState) -> Result<(Expectations, SigmaSet)> {
    let n = state.state_dim();
    let l = state.dict.len();
    let sigma = generate_sigma_points(&state.z_belief, state.kappa)?;

    let x_hat = state.estimate();
    let xx = state.estimate_cov() + &x_hat * x_hat.transpose();

    let mut phi_prev_phi_prev = DMatrix::zeros(l, l);
    let mut x_phi_prev = DMatrix::zeros(n, l);
    let mut phi_phi = DMatrix::zeros(l, l);
    let mut phis = Vec::with_capacity(sigma.len());
    for (w, s) in sigma.weights.iter().zip(&sigma.points) {
        let current = s.rows(0, n).into_owned();
        let previous = s.rows(n, n).into_owned();
        let phi_prev = feature_map(&previous, &state.dict, &state.kernel);
        let phi = feature_map(&current, &state.dict, &state.kernel);
        phi_prev_phi_prev.ger(*w, &phi_prev, &phi_prev, 1.0);
        x_phi_prev.ger(*w, &current, &phi_prev, 1.0);
        phi_phi.ger(*w, &phi, &phi, 1.0);
        phis.push(phi);
    }
    let phi_mean = weighted_mean(&sigma.weights, &phis);
    let e = Expectations {
        xx: symmetrize(&xx),
        phi_prev_phi_prev: symmetrize(&phi_prev_phi_prev),
        x_phi_prev,
        phi_phi: symmetrize(&phi_phi),
        phi_mean,
    };
    Ok((e, sigma))
}

/// Feeds `x̂_{k|k}` to the dictionary and reshapes the parameters to match.
pub fn dictionary_update(state: &mut RkhsUkfState, new_estimate: &DVector<f64>) -> DictionaryChange {
    let change = state.dict.update(new_estimate, &state.kernel);
    match change {
        DictionaryChange::Unchanged => {}
        DictionaryChange::Grew => state.params.grow(),
        DictionaryChange::Slid => {
            state.params.grow();
            state.params.evict(0);
        }
    }
    change
}

/// Predict, update, expectations, parameter update and dictionary update.
/// Returns the new state and `x̂_{k|k}`.
pub fn rkhs_step(state: &RkhsUkfState, y: &DVector<f64>) -> Result<(RkhsUkfState, DVector<f64>)> {
    let (z_pred, _) = rkhs_predict(state)?;
    let mut next = rkhs_update(state, &z_pred, y)?;
    let (expectations, sigma) = rkhs_expectations(&next)?;
    next.sigma = sigma;
    next.params = rkhs_param_update(&next.params, &expectations, y, next.step_index, next.moments)?;
    let estimate = next.estimate();
    dictionary_update(&mut next, &estimate);
    Ok((next, estimate))
}
