//! Radar tracking of a reentering vehicle (range and bearing), forward-Euler
//! discretized. Positions in km, time in s.

use nalgebra::{dvector, DMatrix, DVector};

use crate::gaussian::GaussianBelief;
use crate::model::{vector_map, AdversarialScenario, Dims, NoiseSpec};

use super::{InitialConditions, InverseStart, Scenario, ScenarioDefaults};

// External-source constants: Julier & Uhlmann, "Unscented filtering and
// nonlinear estimation", Proc. IEEE 92(3), 2004, reentry example.
/// Earth radius and radar position along the first axis.
pub const EARTH_RADIUS: f64 = 6374.0;
pub const DENSITY_SCALE_HEIGHT: f64 = 13.406;
pub const GRAVITY_PARAMETER: f64 = 3.9860e5;
pub const BALLISTIC_NOMINAL: f64 = -0.59783;
pub const VELOCITY_PROCESS_VAR: f64 = 2.4064e-5;
pub const AERO_PROCESS_VAR: f64 = 1e-6;
pub const RANGE_STD: f64 = 1e-3;
pub const BEARING_STD: f64 = 0.017;

pub const REENTRY_DT: f64 = 0.1;
pub const REENTRY_X0: [f64; 5] = [6500.4, 349.14, -1.8093, -6.7967, 0.6932];
pub const REENTRY_INVERSE_COV_DIAG: [f64; 5] = [1e-5, 1e-5, 1e-5, 1e-5, 1.0];
pub const REENTRY_FORWARD_COV_DIAG: [f64; 5] = [1e-6, 1e-6, 1e-6, 1e-6, 1.0];

/// Continuous-time drift of the vehicle state.
pub fn reentry_drift(x: &DVector<f64>) -> DVector<f64> {
    let radius = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let speed = (x[2] * x[2] + x[3] * x[3]).sqrt();
    let ballistic = BALLISTIC_NOMINAL * x[4].exp();
    let drag = ballistic * ((EARTH_RADIUS - radius) / DENSITY_SCALE_HEIGHT).exp() * speed;
    let gravity = -GRAVITY_PARAMETER / radius.powi(3);
    dvector![
        x[2],
        x[3],
        drag * x[2] + gravity * x[0],
        drag * x[3] + gravity * x[1],
        0.0
    ]
}

/// Range and bearing from the radar at `(EARTH_RADIUS, 0)`.
pub fn radar_observation(x: &DVector<f64>) -> DVector<f64> {
    let dx = x[0] - EARTH_RADIUS;
    dvector![(dx * dx + x[1] * x[1]).sqrt(), (x[1] / dx).atan()]
}

pub fn build_vehicle_reentry() -> Scenario {
    build_vehicle_reentry_with_step(REENTRY_DT)
}

pub fn build_vehicle_reentry_with_step(dt: f64) -> Scenario {
    let f = vector_map(move |x| x + reentry_drift(x) * dt);
    let h = vector_map(radar_observation);
    let g = vector_map(|x| dvector![x[0], x[1]]);
    let q = DMatrix::from_diagonal(&dvector![0.0, 0.0, VELOCITY_PROCESS_VAR, VELOCITY_PROCESS_VAR, AERO_PROCESS_VAR]);
    let r = DMatrix::from_diagonal(&dvector![RANGE_STD * RANGE_STD, BEARING_STD * BEARING_STD]);
    let model = AdversarialScenario::new(
        "vehicle-reentry",
        Dims { n_x: 5, n_y: 2, n_a: 2 },
        f,
        h,
        g,
        NoiseSpec {
            q,
            r,
            sigma_eps: DMatrix::identity(2, 2) * 3.0,
        },
    );
    let x0 = DVector::from_row_slice(&REENTRY_X0);
    let mut forward_mean = x0.clone();
    forward_mean[4] = 0.0;
    let defaults = ScenarioDefaults {
        horizon: 2000,
        runs: 100,
        forward_kappa: 2.5,
        inverse_kappa_bar: 3.5,
        assumed_forward_kappa: 2.5,
        initial: InitialConditions {
            truth: GaussianBelief::from_parts(x0.clone(), DMatrix::zeros(5, 5)),
            forward: GaussianBelief::from_parts(
                forward_mean,
                DMatrix::from_diagonal(&DVector::from_row_slice(&REENTRY_FORWARD_COV_DIAG)),
            ),
            inverse_mean: InverseStart::Fixed(x0),
            inverse_cov: DMatrix::from_diagonal(&DVector::from_row_slice(&REENTRY_INVERSE_COV_DIAG)),
        },
        rkhs: None,
        position_indices: Some(vec![0, 1]),
        truth_process_noise: None,
    };
    Scenario { model, defaults }
}
