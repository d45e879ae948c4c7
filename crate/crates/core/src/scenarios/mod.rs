//! Benchmark systems with their published constants, synthetic oracle
//! systems, and seeded truth simulation.

mod fm;
mod linear;
mod lorenz;
pub mod noise;
mod reentry;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::gaussian::GaussianBelief;
use crate::model::AdversarialScenario;
use crate::rkhs::RkhsSettings;

pub use fm::{build_fm_demodulator, fm_noise_direction, fm_transition_matrix, FM_BETA, FM_DEFENDER_VAR, FM_PERIOD, FM_PROCESS_VAR};
pub use linear::{
    build_feature_linear, build_linear_oracle, spectral_radius, FeatureLinearSystem, LinearOracle, MAX_LINEAR_DIM,
    MAX_SPECTRAL_RADIUS,
};
pub use lorenz::{build_lorenz, lorenz_step, LORENZ_DT, LORENZ_R};
pub use reentry::{
    build_vehicle_reentry, build_vehicle_reentry_with_step, radar_observation, reentry_drift, REENTRY_DT, REENTRY_X0,
};

use noise::{noise_factor, stream_seed, GaussianStream, StreamPurpose};

/// Where the inverse filter's initial estimate comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InverseStart {
    Fixed(DVector<f64>),
    /// `x̂̂₀ = x̂₀ + δ` with `δ ~ N(0, cov)` drawn per run.
    AroundForward(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    /// `x₀ ~ N(mean, cov)`; a zero covariance pins the start.
    pub truth: GaussianBelief,
    /// Attacker's `(x̂₀, Σ₀)`.
    pub forward: GaussianBelief,
    pub inverse_mean: InverseStart,
    /// Defender's `Σ̄₀`.
    pub inverse_cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkhsDefaults {
    pub forward: RkhsSettings,
    pub inverse: RkhsSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDefaults {
    pub horizon: usize,
    pub runs: usize,
    pub forward_kappa: f64,
    pub inverse_kappa_bar: f64,
    pub assumed_forward_kappa: f64,
    pub initial: InitialConditions,
    pub rkhs: Option<RkhsDefaults>,
    /// State components reported as "position" metrics, when meaningful.
    pub position_indices: Option<Vec<usize>>,
    /// Process noise of the simulated truth when it differs from the filters' `Q`.
    pub truth_process_noise: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: AdversarialScenario,
    pub defaults: ScenarioDefaults,
}

impl Scenario {
    /// The model used to simulate the truth.
    pub fn truth_model(&self) -> std::borrow::Cow<'_, AdversarialScenario> {
        match &self.defaults.truth_process_noise {
            Some(q) => {
                let mut m = self.model.clone();
                m.noise.q = q.clone();
                std::borrow::Cow::Owned(m)
            }
            None => std::borrow::Cow::Borrowed(&self.model),
        }
    }
}

/// Names accepted by [`build_scenario`].
pub const SCENARIO_NAMES: [&str; 4] = ["fm-demodulator", "vehicle-reentry", "lorenz", "linear"];

/// Builds a named scenario; `linear` uses dimensions `(2, 2, 2)` and the given seed.
pub fn build_scenario(name: &str, seed: u64) -> Option<Scenario> {
    match name {
        "fm-demodulator" => Some(build_fm_demodulator()),
        "vehicle-reentry" => Some(build_vehicle_reentry()),
        "lorenz" => Some(build_lorenz()),
        "linear" => Some(build_linear_oracle(2, 2, 2, seed).scenario),
        _ => None,
    }
}

/// True states and attacker observations of one run; index `k` holds step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    /// `y_k = h(x_k) + v_k`; entry 0 is drawn but never consumed by the filters.
    pub observations: Vec<DVector<f64>>,
}

/// Simulates `x_0..x_horizon` and `y_0..y_horizon` from per-purpose streams
/// derived from `run_seed`.
pub fn simulate_truth(
    model: &AdversarialScenario,
    initial: &GaussianBelief,
    horizon: usize,
    run_seed: u64,
) -> Result<Trajectory> {
    let mut init = GaussianStream::new(stream_seed(run_seed, StreamPurpose::Initial, 0));
    let mut process = GaussianStream::new(stream_seed(run_seed, StreamPurpose::Process, 0));
    let mut measurement = GaussianStream::new(stream_seed(run_seed, StreamPurpose::Measurement, 0));
    let mut x = init.sample(&initial.mean, &initial.cov)?;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut observations = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        if k > 0 {
            let q = noise_factor(&model.q_at(k - 1))?;
            x = model.transition(&x) + process.with_factor(&q);
        }
        let r = noise_factor(&model.r_at(k))?;
        observations.push(model.observe(&x) + measurement.with_factor(&r));
        states.push(x.clone());
    }
    Ok(Trajectory { states, observations })
}

/// Defender observations `a_k = g(x̂_k) + ε_k` produced against one attacker
/// filter; `channel` separates the streams of different attacker filters.
#[derive(Debug, Clone)]
pub struct DefenderChannel {
    stream: GaussianStream,
    factor: DMatrix<f64>,
}

impl DefenderChannel {
    pub fn new(model: &AdversarialScenario, run_seed: u64, channel: u64) -> Result<Self> {
        Ok(Self {
            stream: GaussianStream::new(stream_seed(run_seed, StreamPurpose::Defender, channel)),
            factor: noise_factor(&model.noise.sigma_eps)?,
        })
    }

    pub fn observe(&mut self, model: &AdversarialScenario, x_hat: &DVector<f64>, cov: &DMatrix<f64>) -> DVector<f64> {
        model.defender_observe(x_hat, cov) + self.stream.with_factor(&self.factor)
    }
}

/// Initial inverse estimate for one run.
pub fn inverse_initial_mean(start: &InverseStart, forward_mean: &DVector<f64>, run_seed: u64) -> Result<DVector<f64>> {
    match start {
        InverseStart::Fixed(m) => Ok(m.clone()),
        InverseStart::AroundForward(cov) => {
            let mut s = GaussianStream::new(stream_seed(run_seed, StreamPurpose::Initial, 1));
            s.sample(forward_mean, cov)
        }
    }
}
