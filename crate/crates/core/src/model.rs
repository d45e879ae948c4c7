//! The attacker/defender system: defender state transition `f`, attacker
//! observation `h`, defender observation of the attacker's estimate `g`, and
//! the three additive Gaussian noise covariances.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::linalg::{is_symmetric, min_eigenvalue};

pub type VectorMap = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type MatrixMap = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type CovDependentMap = Arc<dyn Fn(&DVector<f64>, &DMatrix<f64>) -> DVector<f64> + Send + Sync>;
pub type NoiseSchedule = Arc<dyn Fn(usize) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync>;

/// Wraps a closure as a [`VectorMap`].
pub fn vector_map<F>(f: F) -> VectorMap
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
{
    Arc::new(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_x: usize,
    pub n_y: usize,
    pub n_a: usize,
}

/// Process, attacker-measurement and defender-measurement noise covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub sigma_eps: DMatrix<f64>,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, m, strict) in [("Q", &self.q, false), ("R", &self.r, true), ("Sigma_eps", &self.sigma_eps, true)] {
            if !is_symmetric(m, 1e-12) {
                return Err(FilterError::InvalidBelief(format!("{name} is not symmetric")));
            }
            let min = min_eigenvalue(m);
            if (strict && min <= 0.0) || (!strict && min < -1e-12) {
                return Err(FilterError::InvalidBelief(format!(
                    "{name} has eigenvalue {min:e}"
                )));
            }
        }
        Ok(())
    }
}

/// How the defender observes the attacker's action.
#[derive(Clone)]
pub enum DefenderObservation {
    /// `a = g(x̂) + ε`.
    Estimate(VectorMap),
    /// `a = g(x̂, Σ) + ε`; the inverse filter substitutes its Σ* for Σ.
    EstimateAndCov(CovDependentMap),
}

/// Optional analytic Jacobians; finite differences are used where absent.
#[derive(Clone, Default)]
pub struct Jacobians {
    pub f: Option<MatrixMap>,
    pub h: Option<MatrixMap>,
    pub g: Option<MatrixMap>,
}

#[derive(Clone)]
pub struct AdversarialScenario {
    pub name: String,
    pub dims: Dims,
    pub f: VectorMap,
    pub h: VectorMap,
    pub g: DefenderObservation,
    pub noise: NoiseSpec,
    /// Overrides `(Q_k, R_k)` per step when present.
    pub noise_schedule: Option<NoiseSchedule>,
    pub jacobians: Jacobians,
}

impl fmt::Debug for AdversarialScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdversarialScenario")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("noise", &self.noise)
            .finish_non_exhaustive()
    }
}

impl AdversarialScenario {
    pub fn new(
        name: impl Into<String>,
        dims: Dims,
        f: VectorMap,
        h: VectorMap,
        g: VectorMap,
        noise: NoiseSpec,
    ) -> Self {
        Self {
            name: name.into(),
            dims,
            f,
            h,
            g: DefenderObservation::Estimate(g),
            noise,
            noise_schedule: None,
            jacobians: Jacobians::default(),
        }
    }

    pub fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }

    pub fn observe(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.h)(x)
    }

    /// Noise-free defender observation of an attacker estimate with covariance `cov`.
    pub fn defender_observe(&self, x_hat: &DVector<f64>, cov: &DMatrix<f64>) -> DVector<f64> {
        match &self.g {
            DefenderObservation::Estimate(g) => g(x_hat),
            DefenderObservation::EstimateAndCov(g) => g(x_hat, cov),
        }
    }

    /// Process noise covariance used for the transition out of step `k`.
    pub fn q_at(&self, k: usize) -> DMatrix<f64> {
        match &self.noise_schedule {
            Some(s) => s(k).0,
            None => self.noise.q.clone(),
        }
    }

    /// Attacker measurement noise covariance at step `k`.
    pub fn r_at(&self, k: usize) -> DMatrix<f64> {
        match &self.noise_schedule {
            Some(s) => s(k).1,
            None => self.noise.r.clone(),
        }
    }

    /// Checks map output dimensions at `x` and the noise covariances.
    pub fn validate_at(&self, x: &DVector<f64>) -> Result<()> {
        let Dims { n_x, n_y, n_a } = self.dims;
        let check = |got: usize, expected: usize, context| {
            if got == expected {
                Ok(())
            } else {
                Err(FilterError::DimensionMismatch { expected, got, context })
            }
        };
        check(x.len(), n_x, "state")?;
        check(self.transition(x).len(), n_x, "f output")?;
        check(self.observe(x).len(), n_y, "h output")?;
        check(self.defender_observe(x, &DMatrix::identity(n_x, n_x)).len(), n_a, "g output")?;
        check(self.noise.q.nrows(), n_x, "Q")?;
        check(self.noise.r.nrows(), n_y, "R")?;
        check(self.noise.sigma_eps.nrows(), n_a, "Sigma_eps")?;
        self.noise.validate()
    }
}
