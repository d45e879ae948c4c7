//! Small dense linear-algebra helpers shared by every filter.
//!
//! Covariance square roots go through [`cholesky_psd`], a lower-triangular
//! factorization that tolerates exactly singular (zero-pivot) columns and
//! otherwise escalates a diagonal jitter until the factorization succeeds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{FilterError, Result};

/// Diagonal jitter escalation used when a covariance is numerically indefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial: f64,
    pub growth: f64,
    pub max_tries: usize,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            initial: 1e-12,
            growth: 10.0,
            max_tries: 8,
        }
    }
}

impl JitterPolicy {
    /// Jitter values tried after the unjittered attempt fails.
    pub fn schedule(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.max_tries).map(move |i| self.initial * self.growth.powi(i as i32))
    }
}

/// Lower-triangular factor with the diagonal jitter that was needed to obtain it.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub l: DMatrix<f64>,
    pub jitter: f64,
}

/// Factorizes a symmetric positive semidefinite matrix as `L Lᵀ = M + jitter·I`.
///
/// A zero attempt is made first; exactly rank-deficient inputs succeed there
/// with zero columns in `L`. Indefinite inputs escalate the jitter per `policy`.
pub fn cholesky_psd(m: &DMatrix<f64>, policy: &JitterPolicy) -> Result<CholeskyFactor> {
    assert!(m.is_square(), "cholesky_psd needs a square matrix");
    if let Some(l) = semidefinite_cholesky(m) {
        return Ok(CholeskyFactor { l, jitter: 0.0 });
    }
    let n = m.nrows();
    let mut last = 0.0;
    for jitter in policy.schedule() {
        last = jitter;
        let shifted = m + DMatrix::identity(n, n) * jitter;
        if let Some(l) = semidefinite_cholesky(&shifted) {
            return Ok(CholeskyFactor { l, jitter });
        }
    }
    Err(FilterError::FactorizationFailure {
        tries: policy.max_tries,
        last_jitter: last,
    })
}

fn semidefinite_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0_f64, f64::max);
    let pivot_tol = 1e-13 * scale;
    let residual_tol = 10.0 * (pivot_tol * scale).sqrt();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() {
            return None;
        }
        if d > pivot_tol {
            let pivot = d.sqrt();
            l[(j, j)] = pivot;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / pivot;
            }
        } else if d >= -pivot_tol {
            // zero pivot: the rest of the column must vanish too
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > residual_tol {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(l)
}

/// Strict positive-definite Cholesky with the same jitter escalation.
pub fn cholesky_pd(m: &DMatrix<f64>, policy: &JitterPolicy) -> Option<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    if let Some(c) = nalgebra::Cholesky::new(m.clone()) {
        return Some((c, 0.0));
    }
    let n = m.nrows();
    policy.schedule().find_map(|jitter| {
        nalgebra::Cholesky::new(m + DMatrix::identity(n, n) * jitter).map(|c| (c, jitter))
    })
}

/// Computes `B · S⁻¹` for symmetric positive-definite `S` without forming the inverse.
pub fn solve_right_spd(b: &DMatrix<f64>, s: &DMatrix<f64>, policy: &JitterPolicy) -> Option<DMatrix<f64>> {
    let (chol, _) = cholesky_pd(s, policy)?;
    // (B S⁻¹)ᵀ = S⁻¹ Bᵀ
    Some(chol.solve(&b.transpose()).transpose())
}

/// Returns `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Clamps eigenvalues of a symmetric matrix from below. Returns whether any
/// eigenvalue had to be raised.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(symmetrize(m));
    if eig.eigenvalues.iter().all(|&v| v >= floor) {
        return (symmetrize(m), false);
    }
    let clamped = eig.eigenvalues.map(|v| v.max(floor));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (symmetrize(&rebuilt), true)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Scales `m` down so its spectral norm does not exceed `bound`.
pub fn clip_spectral_norm(m: DMatrix<f64>, bound: f64) -> DMatrix<f64> {
    let norm = spectral_norm(&m);
    if norm > bound && norm > 0.0 {
        m * (bound / norm)
    } else {
        m
    }
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Concatenates two vectors.
pub fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// True when every entry is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
