//! Euler-discretized Lorenz system observed through scaled distances.

use nalgebra::{dvector, DMatrix, DVector};

use crate::gaussian::GaussianBelief;
use crate::model::{vector_map, AdversarialScenario, Dims, NoiseSpec};
use crate::rkhs::{DictionaryPolicy, KernelSpec, NormBounds, ObservationMoments, RkhsSettings};

use super::{InitialConditions, InverseStart, RkhsDefaults, Scenario, ScenarioDefaults};

pub const LORENZ_DT: f64 = 0.01;
pub const LORENZ_R: [f64; 3] = [10.0, 28.0, 8.0 / 3.0];
pub const LORENZ_NOISE_GAIN: f64 = 0.5;
pub const LORENZ_OBS_GAIN: f64 = 0.065;
pub const LORENZ_ACTION_GAIN: f64 = 0.1;

pub fn lorenz_step(x: &DVector<f64>) -> DVector<f64> {
    let [r1, r2, r3] = LORENZ_R;
    dvector![
        x[0] + LORENZ_DT * r1 * (x[1] - x[0]),
        x[1] + LORENZ_DT * (r2 * x[0] - x[1] - x[0] * x[2]),
        x[2] + LORENZ_DT * (x[0] * x[1] - r3 * x[2])
    ]
}

pub fn build_lorenz() -> Scenario {
    let h = vector_map(|x| dvector![LORENZ_DT * ((x[0] - 0.5).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt()]);
    let g = vector_map(|x| dvector![LORENZ_DT * (x[0] * x[0] + (x[1] - 0.5).powi(2) + x[2] * x[2]).sqrt()]);
    let q = DMatrix::from_diagonal(&dvector![0.0, 0.0, LORENZ_NOISE_GAIN.powi(2) * LORENZ_DT]);
    let model = AdversarialScenario::new(
        "lorenz",
        Dims { n_x: 3, n_y: 1, n_a: 1 },
        vector_map(lorenz_step),
        h,
        g,
        NoiseSpec {
            q,
            r: DMatrix::from_element(1, 1, LORENZ_OBS_GAIN.powi(2) * LORENZ_DT),
            sigma_eps: DMatrix::from_element(1, 1, LORENZ_ACTION_GAIN.powi(2) * LORENZ_DT),
        },
    );
    let cov = DMatrix::identity(3, 3) * 0.35;
    let x0 = dvector![-0.2, -0.3, -0.5];
    let rkhs = RkhsSettings {
        kappa: 3.0,
        kernel: KernelSpec { sigma2: 20.0 },
        policy: DictionaryPolicy::SlidingWindow { window: 15 },
        bounds: NormBounds::default(),
        init_fill: 1.0,
        moments: ObservationMoments::default(),
    };
    let defaults = ScenarioDefaults {
        horizon: 2000,
        runs: 50,
        forward_kappa: 1.5,
        inverse_kappa_bar: 2.0,
        assumed_forward_kappa: 1.5,
        initial: InitialConditions {
            truth: GaussianBelief::from_parts(x0.clone(), DMatrix::zeros(3, 3)),
            forward: GaussianBelief::from_parts(dvector![1.35, -3.0, 6.0], cov.clone()),
            inverse_mean: InverseStart::Fixed(x0),
            inverse_cov: cov,
        },
        rkhs: Some(RkhsDefaults {
            forward: rkhs.clone(),
            inverse: rkhs,
        }),
        position_indices: None,
        truth_process_noise: None,
    };
    Scenario { model, defaults }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_constants() {
        assert_eq!(LORENZ_DT, 0.01);
        assert_eq!(LORENZ_R, [10.0, 28.0, 8.0 / 3.0]);
        let s = build_lorenz();
        assert_eq!(s.model.noise.q[(2, 2)], 0.25 * 0.01);
        assert_eq!(s.model.noise.q[(0, 0)], 0.0);
        assert!((s.model.noise.r[(0, 0)] - 0.065f64.powi(2) * 0.01).abs() < 1e-18);
        assert!((s.model.noise.sigma_eps[(0, 0)] - 1e-4).abs() < 1e-18);
        let d = &s.defaults;
        assert_eq!(d.initial.forward.mean, dvector![1.35, -3.0, 6.0]);
        assert_eq!(d.initial.truth.mean, dvector![-0.2, -0.3, -0.5]);
        assert_eq!(d.initial.inverse_cov, DMatrix::identity(3, 3) * 0.35);
        let r = d.rkhs.as_ref().unwrap();
        assert_eq!(r.forward.kappa, 3.0);
        assert_eq!(r.forward.kernel.sigma2, 20.0);
        assert_eq!(r.forward.policy, DictionaryPolicy::SlidingWindow { window: 15 });
        assert_eq!(d.forward_kappa, 1.5);
        assert_eq!(d.inverse_kappa_bar, 2.0);
    }

    #[test]
    fn observation_distance() {
        let s = build_lorenz();
        assert!((s.model.observe(&dvector![0.5, 3.0, 4.0])[0] - 0.05).abs() < 1e-15);
        assert!((s.model.defender_observe(&dvector![3.0, 4.5, 0.0], &DMatrix::zeros(3, 3))[0] - 0.05).abs() < 1e-15);
    }
}
