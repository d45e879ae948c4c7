use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::linalg::{is_symmetric, min_eigenvalue, symmetrize};

const SYMMETRY_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;

/// Mean vector and covariance matrix of a Gaussian state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Builds a belief after checking symmetry and positive semidefiniteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let belief = Self { mean, cov };
        belief.validate()?;
        Ok(belief)
    }

    /// Builds a belief without running the eigenvalue check. The covariance
    /// is symmetrized.
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self {
            mean,
            cov: symmetrize(&cov),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if self.cov.nrows() != n || self.cov.ncols() != n {
            return Err(FilterError::DimensionMismatch {
                expected: n,
                got: self.cov.nrows(),
                context: "belief covariance",
            });
        }
        if !self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite()) {
            return Err(FilterError::InvalidBelief("non-finite entry".into()));
        }
        if !is_symmetric(&self.cov, SYMMETRY_TOL) {
            return Err(FilterError::InvalidBelief("covariance is not symmetric".into()));
        }
        let floor = -PSD_TOL * (1.0 + self.cov.norm());
        let min = min_eigenvalue(&self.cov);
        if min < floor {
            return Err(FilterError::InvalidBelief(format!(
                "covariance has eigenvalue {min:e} below {floor:e}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn accepts_psd() {
        assert!(GaussianBelief::new(dvector![0.0, 1.0], dmatrix![1.0, 1.0; 1.0, 1.0]).is_ok());
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        assert!(GaussianBelief::new(dvector![0.0, 0.0], dmatrix![1.0, 0.5; 0.0, 1.0]).is_err());
        assert!(GaussianBelief::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0; 0.0, -0.1]).is_err());
        assert!(GaussianBelief::new(dvector![0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).is_err());
    }
}
