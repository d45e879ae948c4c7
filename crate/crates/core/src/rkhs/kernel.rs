use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};

/// Gaussian kernel `K(a, b) = exp(-‖a - b‖² / σ²)`.
///
/// The width divides the squared distance directly (no factor of two).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub sigma2: f64,
}

impl KernelSpec {
    pub fn new(sigma2: f64) -> Result<Self> {
        if sigma2 > 0.0 && sigma2.is_finite() {
            Ok(Self { sigma2 })
        } else {
            Err(FilterError::DegenerateInputs(format!("kernel width {sigma2} must be positive")))
        }
    }

    pub fn eval(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (-(a - b).norm_squared() / self.sigma2).exp()
    }
}

/// Dictionary maintenance rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DictionaryPolicy {
    /// Keep the most recent `window` estimates.
    SlidingWindow { window: usize },
    /// Admit an estimate when its kernel least-squares residual against the
    /// current atoms is at least `nu`.
    Ald { nu: f64 },
    /// Never change the atoms.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub atoms: Vec<DVector<f64>>,
    pub policy: DictionaryPolicy,
}

/// What a dictionary update did to the atom list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryChange {
    Unchanged,
    /// A new atom was appended at the end.
    Grew,
    /// A new atom was appended and the oldest one (index 0) dropped.
    Slid,
}

const ALD_RIDGE: f64 = 1e-10;

impl Dictionary {
    pub fn new(first: DVector<f64>, policy: DictionaryPolicy) -> Self {
        Self {
            atoms: vec![first],
            policy,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Kernel least-squares residual `K(x,x) - kᵀ (G + εI)⁻¹ k` of `x` against the atoms.
    pub fn ald_residual(&self, x: &DVector<f64>, kernel: &KernelSpec) -> f64 {
        let l = self.atoms.len();
        let gram = DMatrix::from_fn(l, l, |i, j| kernel.eval(&self.atoms[i], &self.atoms[j]))
            + DMatrix::identity(l, l) * ALD_RIDGE;
        let k = feature_map(x, self, kernel);
        let solved = match gram.clone().cholesky() {
            Some(c) => c.solve(&k),
            None => match gram.lu().solve(&k) {
                Some(s) => s,
                None => return 1.0,
            },
        };
        (1.0 - k.dot(&solved)).max(0.0)
    }

    /// Applies the policy to a new estimate.
    pub fn update(&mut self, x: &DVector<f64>, kernel: &KernelSpec) -> DictionaryChange {
        match self.policy {
            DictionaryPolicy::Fixed => DictionaryChange::Unchanged,
            DictionaryPolicy::SlidingWindow { window } => {
                self.atoms.push(x.clone());
                if self.atoms.len() > window {
                    self.atoms.remove(0);
                    DictionaryChange::Slid
                } else {
                    DictionaryChange::Grew
                }
            }
            DictionaryPolicy::Ald { nu } => {
                if self.ald_residual(x, kernel) >= nu {
                    self.atoms.push(x.clone());
                    DictionaryChange::Grew
                } else {
                    DictionaryChange::Unchanged
                }
            }
        }
    }
}

/// `Φ(x) = [K(x̃_1, x), …, K(x̃_L, x)]ᵀ`.
pub fn feature_map(x: &DVector<f64>, dict: &Dictionary, kernel: &KernelSpec) -> DVector<f64> {
    DVector::from_iterator(dict.atoms.len(), dict.atoms.iter().map(|a| kernel.eval(a, x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn feature_map_fixtures() {
        let kernel = KernelSpec::new(2.0).unwrap();
        let mut dict = Dictionary::new(dvector![0.0, 0.0], DictionaryPolicy::Fixed);
        dict.atoms.push(dvector![1.0, 1.0]);
        dict.atoms.push(dvector![2.0, 0.0]);
        // x equals atom 0
        let phi = feature_map(&dvector![0.0, 0.0], &dict, &kernel);
        assert_eq!(phi[0], 1.0);
        // ‖x - atom1‖² = 2 = σ²
        assert!((phi[1] - (-1.0f64).exp()).abs() < 1e-15);
        // atoms 0 and 2 are symmetric about (1, 0)
        let phi = feature_map(&dvector![1.0, 0.0], &dict, &kernel);
        assert_eq!(phi[0], phi[2]);
        assert!(phi.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn sliding_window_keeps_latest() {
        let kernel = KernelSpec::new(20.0).unwrap();
        let mut dict = Dictionary::new(dvector![0.0], DictionaryPolicy::SlidingWindow { window: 15 });
        for i in 1..=20 {
            dict.update(&dvector![i as f64], &kernel);
        }
        assert_eq!(dict.len(), 15);
        let expected: Vec<f64> = (6..=20).map(|i| i as f64).collect();
        assert_eq!(dict.atoms.iter().map(|a| a[0]).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn ald_thresholds() {
        let kernel = KernelSpec::new(1.0).unwrap();
        let mut huge = Dictionary::new(dvector![0.0], DictionaryPolicy::Ald { nu: 1e9 });
        let mut zero = Dictionary::new(dvector![0.0], DictionaryPolicy::Ald { nu: 0.0 });
        for i in 1..=10 {
            let x = dvector![0.3 * i as f64];
            huge.update(&x, &kernel);
            zero.update(&x, &kernel);
        }
        assert_eq!(huge.len(), 1);
        assert_eq!(zero.len(), 11);
    }

    #[test]
    fn ald_residual_vanishes_on_atoms() {
        let kernel = KernelSpec::new(1.0).unwrap();
        let dict = Dictionary::new(dvector![0.5], DictionaryPolicy::Ald { nu: 0.1 });
        assert!(dict.ald_residual(&dvector![0.5], &kernel) < 1e-8);
        assert!(dict.ald_residual(&dvector![10.0], &kernel) > 0.99);
    }
}
