//! FM demodulator: state `(λ, θ)`, phase observed through `√2 [sin θ, cos θ]`,
//! attacker action `λ̂²`.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::gaussian::GaussianBelief;
use crate::model::{vector_map, AdversarialScenario, Dims, NoiseSpec};

use super::{InitialConditions, InverseStart, Scenario, ScenarioDefaults};

pub const FM_PERIOD: f64 = 2.0 * std::f64::consts::PI / 16.0;
pub const FM_BETA: f64 = 100.0;
pub const FM_PROCESS_VAR: f64 = 0.01;
pub const FM_DEFENDER_VAR: f64 = 5.0;

/// `[[e^{-T/β}, 0], [-β e^{-T/β} - 1, 1]]`.
pub fn fm_transition_matrix(period: f64, beta: f64) -> DMatrix<f64> {
    let decay = (-period / beta).exp();
    dmatrix![decay, 0.0; -beta * decay - 1.0, 1.0]
}

/// Direction `[1, -β]ᵀ` along which the scalar process noise enters.
pub fn fm_noise_direction(beta: f64) -> DVector<f64> {
    dvector![1.0, -beta]
}

pub fn build_fm_demodulator() -> Scenario {
    let f_mat = fm_transition_matrix(FM_PERIOD, FM_BETA);
    let direction = fm_noise_direction(FM_BETA);
    let q = &direction * direction.transpose() * FM_PROCESS_VAR;
    let f = vector_map(move |x| &f_mat * x);
    let h = vector_map(|x| dvector![2f64.sqrt() * x[1].sin(), 2f64.sqrt() * x[1].cos()]);
    let g = vector_map(|x| dvector![x[0] * x[0]]);
    let model = AdversarialScenario::new(
        "fm-demodulator",
        Dims { n_x: 2, n_y: 2, n_a: 1 },
        f,
        h,
        g,
        NoiseSpec {
            q,
            r: DMatrix::identity(2, 2),
            sigma_eps: dmatrix![FM_DEFENDER_VAR],
        },
    );
    let prior = DMatrix::identity(2, 2);
    let defaults = ScenarioDefaults {
        horizon: 100,
        runs: 500,
        forward_kappa: 1.0,
        inverse_kappa_bar: 1.0,
        assumed_forward_kappa: 2.0,
        initial: InitialConditions {
            truth: GaussianBelief::from_parts(DVector::zeros(2), prior.clone()),
            forward: GaussianBelief::from_parts(DVector::zeros(2), prior.clone()),
            inverse_mean: InverseStart::AroundForward(prior.clone()),
            inverse_cov: prior,
        },
        rkhs: None,
        position_indices: None,
        truth_process_noise: None,
    };
    Scenario { model, defaults }
}
