//! Non-credibility index.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::linalg::floor_eigenvalues;

/// Eigenvalue floor applied to `Σ_m` and `P_m` before inversion.
pub const CREDIBILITY_FLOOR: f64 = 1e-12;

/// Errors and covariances of `M` runs at a single time step.
#[derive(Debug, Clone)]
pub struct CredibilityInputs {
    pub errors: Vec<DVector<f64>>,
    /// Filter-reported covariances `Σ_m`.
    pub covariances: Vec<DMatrix<f64>>,
    /// Actual MSE matrices `P_m`.
    pub mse: Vec<DMatrix<f64>>,
}

impl CredibilityInputs {
    /// Uses the across-run sample MSE `P = (1/M) Σ x̃_m x̃_mᵀ` for every run.
    pub fn with_sample_mse(errors: Vec<DVector<f64>>, covariances: Vec<DMatrix<f64>>) -> Self {
        let p = sample_mse(&errors);
        let mse = vec![p; errors.len()];
        Self {
            errors,
            covariances,
            mse,
        }
    }
}

/// `(1/M) Σ x̃ x̃ᵀ`.
pub fn sample_mse(errors: &[DVector<f64>]) -> DMatrix<f64> {
    let n = errors.first().map_or(0, |e| e.len());
    let mut p = DMatrix::zeros(n, n);
    for e in errors {
        p.ger(1.0, e, e, 1.0);
    }
    if !errors.is_empty() {
        p /= errors.len() as f64;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NciReport {
    /// Decibels; positive is optimistic, negative pessimistic.
    pub value: f64,
    /// Runs with zero error that were left out.
    pub skipped: usize,
    /// Matrices that needed the eigenvalue floor.
    pub floored: usize,
}

fn quadratic_form_inverse(m: &DMatrix<f64>, e: &DVector<f64>, floored: &mut usize) -> f64 {
    let (m, hit) = floor_eigenvalues(m, CREDIBILITY_FLOOR);
    *floored += hit as usize;
    let solved = match m.clone().cholesky() {
        Some(c) => c.solve(e),
        None => m.lu().solve(e).unwrap_or_else(|| DVector::from_element(e.len(), f64::NAN)),
    };
    e.dot(&solved)
}

/// `NCI = (10/M) Σ log₁₀(ε_m / ε*_m)` with `ε = x̃ᵀΣ⁻¹x̃`, `ε* = x̃ᵀP⁻¹x̃`.
pub fn nci(inputs: &CredibilityInputs) -> Result<NciReport> {
    let m = inputs.errors.len();
    if m < 2 {
        return Err(FilterError::InsufficientRuns { required: 2, got: m });
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    let mut floored = 0usize;
    for ((e, sigma), p) in inputs.errors.iter().zip(&inputs.covariances).zip(&inputs.mse) {
        if e.iter().all(|&v| v == 0.0) {
            skipped += 1;
            continue;
        }
        let eps = quadratic_form_inverse(sigma, e, &mut floored);
        let eps_star = quadratic_form_inverse(p, e, &mut floored);
        sum += (eps / eps_star).log10();
        used += 1;
    }
    if used == 0 {
        return Err(FilterError::DegenerateInputs("every run has zero error".into()));
    }
    Ok(NciReport {
        value: 10.0 * sum / used as f64,
        skipped,
        floored,
    })
}
