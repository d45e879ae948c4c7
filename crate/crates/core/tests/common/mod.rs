//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use invukf_core::scenarios::noise::GaussianStream;
use invukf_core::scenarios::{simulate_truth, LinearOracle, Trajectory};
use invukf_core::{GaussianBelief, UkfState};

/// Textbook Kalman filter step with the Joseph-form covariance update.
pub fn kf_step(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    f: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    kf_step_with_input(mean, cov, f, &DVector::zeros(mean.len()), h, q, r, y)
}

#[allow(clippy::too_many_arguments)]
pub fn kf_step_with_input(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    f: &DMatrix<f64>,
    input: &DVector<f64>,
    h: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let x_pred = f * mean + input;
    let p_pred = f * cov * f.transpose() + q;
    let s = h * &p_pred * h.transpose() + r;
    let k = &p_pred * h.transpose() * s.try_inverse().expect("innovation covariance invertible");
    let x = &x_pred + &k * (y - h * &x_pred);
    let i_kh = DMatrix::identity(mean.len(), mean.len()) - &k * h;
    let p = &i_kh * p_pred * i_kh.transpose() + &k * r * k.transpose();
    (x, (&p + p.transpose()) * 0.5)
}

/// Kalman gain and posterior covariance of the forward Riccati recursion.
pub fn riccati_step(
    cov: &DMatrix<f64>,
    f: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let p_pred = f * cov * f.transpose() + q;
    let s = h * &p_pred * h.transpose() + r;
    let k = &p_pred * h.transpose() * s.try_inverse().unwrap();
    let i_kh = DMatrix::identity(cov.nrows(), cov.nrows()) - &k * h;
    let p = &i_kh * p_pred * i_kh.transpose() + &k * r * k.transpose();
    (k, (&p + p.transpose()) * 0.5)
}

/// One seeded scenario instance: truth, forward UKF estimates, defender actions.
pub struct LinearRun {
    pub truth: Trajectory,
    pub forward: Vec<UkfState>,
    pub actions: Vec<DVector<f64>>,
}

pub fn linear_run(oracle: &LinearOracle, steps: usize, seed: u64) -> LinearRun {
    let model = &oracle.scenario.model;
    let init = &oracle.scenario.defaults.initial;
    let truth = simulate_truth(model, &init.truth, steps, seed).unwrap();
    let mut forward = vec![UkfState::new(init.forward.clone(), 1.0)];
    for k in 1..=steps {
        let (next, _) = invukf_core::ukf_step(&forward[k - 1], &truth.observations[k], model).unwrap();
        forward.push(next);
    }
    let mut eps = GaussianStream::new(seed ^ 0xa5a5_a5a5);
    let actions = forward
        .iter()
        .map(|s| &oracle.g * &s.belief.mean + eps.sample(&DVector::zeros(oracle.g.nrows()), &model.noise.sigma_eps).unwrap())
        .collect();
    LinearRun { truth, forward, actions }
}

/// Kalman filter on the inverse system
/// `x̂_{k+1} = (I − KH)F x̂_k + KH x_{k+1} + K v`, `a = G x̂ + ε`,
/// with the attacker's gain taken from the Riccati recursion started at `forward_cov0`.
pub fn inverse_kf(
    oracle: &LinearOracle,
    run: &LinearRun,
    forward_cov0: &DMatrix<f64>,
    start: &GaussianBelief,
    steps: usize,
) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let model = &oracle.scenario.model;
    let (q, r, eps) = (&model.noise.q, &model.noise.r, &model.noise.sigma_eps);
    let n = oracle.f.nrows();
    let mut sigma = forward_cov0.clone();
    let mut out = vec![(start.mean.clone(), start.cov.clone())];
    for k in 1..=steps {
        let (gain, next_sigma) = riccati_step(&sigma, &oracle.f, &oracle.h, q, r);
        sigma = next_sigma;
        let transition = (DMatrix::identity(n, n) - &gain * &oracle.h) * &oracle.f;
        let input = &gain * &oracle.h * &run.truth.states[k];
        let q_bar = &gain * r * gain.transpose();
        let (m, p) = &out[k - 1];
        out.push(kf_step_with_input(m, p, &transition, &input, &oracle.g, &q_bar, eps, &run.actions[k]));
    }
    out
}

pub fn max_abs(m: impl IntoIterator<Item = f64>) -> f64 {
    m.into_iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Spectral norm through the singular values.
pub fn spectral(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Sigma points and weights built directly from nalgebra's Cholesky factor.
pub fn hand_sigma(mean: &DVector<f64>, cov: &DMatrix<f64>, kappa: f64) -> (Vec<DVector<f64>>, Vec<f64>) {
    let n = mean.len();
    let scale = n as f64 + kappa;
    let l = (cov * scale).cholesky().expect("positive definite").l();
    let mut points = vec![mean.clone()];
    let mut weights = vec![kappa / scale];
    for sign in [1.0, -1.0] {
        for i in 0..n {
            points.push(mean + l.column(i) * sign);
            weights.push(0.5 / scale);
        }
    }
    (points, weights)
}

fn weighted(points: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
    points.iter().zip(weights).fold(DVector::zeros(points[0].len()), |acc, (p, w)| acc + p * *w)
}

/// Straight-line unscented Kalman step with explicit weighted sums.
#[allow(clippy::too_many_arguments)]
pub fn hand_ukf_step(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    kappa: f64,
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    h: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (pts, w) = hand_sigma(mean, cov, kappa);
    let moved: Vec<_> = pts.iter().map(f).collect();
    let x_pred = weighted(&moved, &w);
    let mut p_pred = q.clone();
    for (p, wi) in moved.iter().zip(&w) {
        p_pred += (p - &x_pred) * (p - &x_pred).transpose() * *wi;
    }
    let (pts, w) = hand_sigma(&x_pred, &p_pred, kappa);
    let obs: Vec<_> = pts.iter().map(h).collect();
    let y_pred = weighted(&obs, &w);
    let mut s = r.clone();
    let mut c = DMatrix::zeros(mean.len(), y.len());
    for ((o, p), wi) in obs.iter().zip(&pts).zip(&w) {
        s += (o - &y_pred) * (o - &y_pred).transpose() * *wi;
        c += (p - &x_pred) * (o - &y_pred).transpose() * *wi;
    }
    let k = &c * s.clone().try_inverse().unwrap();
    let x = &x_pred + &k * (y - y_pred);
    let p = &p_pred - &k * s * k.transpose();
    (x, p, k)
}
