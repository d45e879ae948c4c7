//! Synthetic oracle systems: random stable linear systems and systems that
//! are exactly linear in kernel features.

use nalgebra::{DMatrix, DVector};

use crate::gaussian::GaussianBelief;
use crate::model::{vector_map, AdversarialScenario, Dims, Jacobians, NoiseSpec};
use crate::rkhs::{feature_map, Dictionary, DictionaryPolicy, KernelSpec};

use super::noise::GaussianStream;
use super::{InitialConditions, InverseStart, Scenario, ScenarioDefaults};

pub const MAX_LINEAR_DIM: usize = 6;
pub const MAX_SPECTRAL_RADIUS: f64 = 0.95;

/// Random linear system `x' = Fx + w`, `y = Hx + v`, `a = Gx̂ + ε`.
#[derive(Debug, Clone)]
pub struct LinearOracle {
    pub scenario: Scenario,
    pub f: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn random_matrix(stream: &mut GaussianStream, rows: usize, cols: usize) -> DMatrix<f64> {
    let v = stream.standard(rows * cols);
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

fn random_spd(stream: &mut GaussianStream, n: usize, floor: f64) -> DMatrix<f64> {
    let c = random_matrix(stream, n, n);
    (&c * c.transpose()) / n as f64 + DMatrix::identity(n, n) * floor
}

/// Deterministic in `seed`. Dimensions must not exceed [`MAX_LINEAR_DIM`].
pub fn build_linear_oracle(n_x: usize, n_y: usize, n_a: usize, seed: u64) -> LinearOracle {
    assert!(
        (1..=MAX_LINEAR_DIM).contains(&n_x) && (1..=MAX_LINEAR_DIM).contains(&n_y) && (1..=MAX_LINEAR_DIM).contains(&n_a),
        "linear oracle dimensions must lie in 1..={MAX_LINEAR_DIM}"
    );
    let mut stream = GaussianStream::new(seed);
    let raw = random_matrix(&mut stream, n_x, n_x);
    let target = MAX_SPECTRAL_RADIUS * (0.5 + 0.5 * stream.standard(1)[0].tanh().abs());
    let rho = spectral_radius(&raw);
    let f = if rho > 0.0 { raw * (target / rho) } else { raw };
    let h = random_matrix(&mut stream, n_y, n_x);
    let g = random_matrix(&mut stream, n_a, n_x);
    let noise = NoiseSpec {
        q: random_spd(&mut stream, n_x, 0.1),
        r: random_spd(&mut stream, n_y, 0.5),
        sigma_eps: random_spd(&mut stream, n_a, 0.5),
    };
    let (fm, hm, gm) = (f.clone(), h.clone(), g.clone());
    let mut model = AdversarialScenario::new(
        "linear",
        Dims { n_x, n_y, n_a },
        vector_map(move |x| &fm * x),
        vector_map(move |x| &hm * x),
        vector_map(move |x| &gm * x),
        noise,
    );
    let (fj, hj, gj) = (f.clone(), h.clone(), g.clone());
    model.jacobians = Jacobians {
        f: Some(std::sync::Arc::new(move |_| fj.clone())),
        h: Some(std::sync::Arc::new(move |_| hj.clone())),
        g: Some(std::sync::Arc::new(move |_| gj.clone())),
    };
    let prior = DMatrix::identity(n_x, n_x);
    let defaults = ScenarioDefaults {
        horizon: 50,
        runs: 200,
        forward_kappa: 1.0,
        inverse_kappa_bar: 1.0,
        assumed_forward_kappa: 1.0,
        initial: InitialConditions {
            truth: GaussianBelief::from_parts(DVector::zeros(n_x), prior.clone()),
            forward: GaussianBelief::from_parts(DVector::zeros(n_x), prior.clone()),
            inverse_mean: InverseStart::AroundForward(prior.clone()),
            inverse_cov: prior,
        },
        rkhs: None,
        position_indices: None,
        truth_process_noise: None,
    };
    LinearOracle {
        scenario: Scenario { model, defaults },
        f,
        h,
        g,
    }
}

/// System whose maps are exactly `x' = AΦ(x) + w`, `y = BΦ(x) + v` over a
/// fixed dictionary.
#[derive(Debug, Clone)]
pub struct FeatureLinearSystem {
    pub dictionary: Dictionary,
    pub kernel: KernelSpec,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub model: AdversarialScenario,
}

pub fn build_feature_linear(
    atoms: Vec<DVector<f64>>,
    kernel: KernelSpec,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
) -> FeatureLinearSystem {
    let n_x = a.nrows();
    let n_y = b.nrows();
    let dictionary = Dictionary {
        atoms,
        policy: DictionaryPolicy::Fixed,
    };
    let (d1, a1) = (dictionary.clone(), a.clone());
    let (d2, b2) = (dictionary.clone(), b.clone());
    let model = AdversarialScenario::new(
        "feature-linear",
        Dims { n_x, n_y, n_a: n_x },
        vector_map(move |x| &a1 * feature_map(x, &d1, &kernel)),
        vector_map(move |x| &b2 * feature_map(x, &d2, &kernel)),
        vector_map(|x| x.clone()),
        NoiseSpec {
            q,
            r,
            sigma_eps: DMatrix::identity(n_x, n_x),
        },
    );
    FeatureLinearSystem {
        dictionary,
        kernel,
        a,
        b,
        model,
    }
}
