//! Symmetric sigma-point generation and the unscented moment transform.
//!
//! For a belief `N(m, Σ)` of dimension `n` and spread parameter `κ`, the set
//! holds `2n + 1` points: `m`, then `m ± cᵢ` where `cᵢ` is the i-th column of
//! the lower Cholesky factor of `(n + κ)Σ`. Weights are `κ / (n + κ)` for the
//! centre and `1 / (2(n + κ))` for the others.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{cholesky_psd, symmetrize, JitterPolicy};

thread_local! {
    static GENERATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of sigma sets generated on the current thread so far.
///
/// Filters are stepped on a single thread, so differencing this counter around
/// a call counts the sigma sets that call generated.
pub fn sigma_generation_count() -> u64 {
    GENERATIONS.with(Cell::get)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSet {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub kappa: f64,
    /// Diagonal jitter the square root needed; zero on healthy inputs.
    pub jitter: f64,
}

impl SigmaSet {
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.points[0]
    }
}

/// Weights of the symmetric set for dimension `n`.
pub fn sigma_weights(n: usize, kappa: f64) -> Result<Vec<f64>> {
    let scale = n as f64 + kappa;
    if scale <= 0.0 || !scale.is_finite() {
        return Err(FilterError::NonPositiveScaling(scale));
    }
    let mut weights = vec![1.0 / (2.0 * scale); 2 * n + 1];
    weights[0] = kappa / scale;
    Ok(weights)
}

pub fn generate_sigma_points(belief: &GaussianBelief, kappa: f64) -> Result<SigmaSet> {
    generate_sigma_points_with(belief, kappa, &JitterPolicy::default())
}

pub fn generate_sigma_points_with(
    belief: &GaussianBelief,
    kappa: f64,
    policy: &JitterPolicy,
) -> Result<SigmaSet> {
    let n = belief.dim();
    let weights = sigma_weights(n, kappa)?;
    let scale = n as f64 + kappa;
    let factor = cholesky_psd(&(&belief.cov * scale), policy)?;
    GENERATIONS.with(|c| c.set(c.get() + 1));

    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(belief.mean.clone());
    for i in 0..n {
        points.push(&belief.mean + factor.l.column(i));
    }
    for i in 0..n {
        points.push(&belief.mean - factor.l.column(i));
    }
    Ok(SigmaSet {
        points,
        weights,
        kappa,
        jitter: factor.jitter,
    })
}

/// Weighted statistics of a propagated point set.
#[derive(Debug, Clone, PartialEq)]
pub struct UnscentedMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Cross-covariance between the input points and the propagated points.
    pub cross_cov: DMatrix<f64>,
}

/// Propagates every sigma point through `map` and returns the weighted mean,
/// covariance (plus `additive_cov` when given) and input/output cross-covariance.
pub fn unscented_transform<F>(
    sigma: &SigmaSet,
    map: F,
    additive_cov: Option<&DMatrix<f64>>,
) -> Result<UnscentedMoments>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let outputs: Vec<DVector<f64>> = sigma.points.iter().map(map).collect();
    weighted_moments(&sigma.weights, &sigma.points, &outputs, additive_cov)
}

/// Weighted mean/covariance of `outputs` and their cross-covariance with `inputs`.
pub fn weighted_moments(
    weights: &[f64],
    inputs: &[DVector<f64>],
    outputs: &[DVector<f64>],
    additive_cov: Option<&DMatrix<f64>>,
) -> Result<UnscentedMoments> {
    let m = outputs[0].len();
    if let Some(bad) = outputs.iter().find(|y| y.len() != m) {
        return Err(FilterError::DimensionMismatch {
            expected: m,
            got: bad.len(),
            context: "propagated sigma point",
        });
    }
    let n = inputs[0].len();
    let in_mean = weighted_mean(weights, inputs);
    let out_mean = weighted_mean(weights, outputs);

    let mut cov = DMatrix::zeros(m, m);
    let mut cross = DMatrix::zeros(n, m);
    for ((w, x), y) in weights.iter().zip(inputs).zip(outputs) {
        let dy = y - &out_mean;
        let dx = x - &in_mean;
        cov.ger(*w, &dy, &dy, 1.0);
        cross.ger(*w, &dx, &dy, 1.0);
    }
    if let Some(extra) = additive_cov {
        if extra.nrows() != m {
            return Err(FilterError::DimensionMismatch {
                expected: m,
                got: extra.nrows(),
                context: "additive covariance",
            });
        }
        cov += extra;
    }
    Ok(UnscentedMoments {
        mean: out_mean,
        cov: symmetrize(&cov),
        cross_cov: cross,
    })
}

pub fn weighted_mean(weights: &[f64], points: &[DVector<f64>]) -> DVector<f64> {
    let mut mean = DVector::zeros(points[0].len());
    for (w, p) in weights.iter().zip(points) {
        mean.axpy(*w, p, 1.0);
    }
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn std_normal_1d() -> GaussianBelief {
        GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap()
    }

    #[test]
    fn scalar_points_and_weights() {
        let s = generate_sigma_points(&std_normal_1d(), 2.0).unwrap();
        let r3 = 3.0_f64.sqrt();
        assert_eq!(s.points[0][0], 0.0);
        assert!((s.points[1][0] - r3).abs() < 1e-15);
        assert!((s.points[2][0] + r3).abs() < 1e-15);
        assert!((s.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.weights[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.weights[2] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn five_dim_centre_weight_one_third() {
        let w = sigma_weights(5, 2.5).unwrap();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(w[1..].iter().all(|&v| (v - 1.0 / 15.0).abs() < 1e-15));
    }

    #[test]
    fn zero_cov_collapses() {
        let b = GaussianBelief::new(dvector![1.0, -2.0, 3.0], DMatrix::zeros(3, 3)).unwrap();
        let s = generate_sigma_points(&b, 1.0).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.points.iter().all(|p| p == &b.mean));
    }

    #[test]
    fn rejects_non_positive_scaling() {
        let err = generate_sigma_points(&std_normal_1d(), -1.0).unwrap_err();
        assert!(matches!(err, FilterError::NonPositiveScaling(_)));
    }

    #[test]
    fn square_map_mean_is_one() {
        let s = generate_sigma_points(&std_normal_1d(), 2.0).unwrap();
        let m = unscented_transform(&s, |x| x.map(|v| v * v), None).unwrap();
        assert!((m.mean[0] - 1.0).abs() < 1e-12);
        let m = unscented_transform(&s, |x| x.map(|v| v * v * v), None).unwrap();
        assert!(m.mean[0].abs() < 1e-12);
    }

    #[test]
    fn linear_map_is_exact() {
        let b = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
        let a = dmatrix![1.0, 2.0; -0.5, 0.7; 3.0, 0.0];
        let extra = DMatrix::identity(3, 3) * 0.1;
        let s = generate_sigma_points(&b, 0.5).unwrap();
        let m = unscented_transform(&s, |x| &a * x, Some(&extra)).unwrap();
        assert!((m.mean - &a * &b.mean).abs().max() < 1e-10);
        assert!((m.cov - (&a * &b.cov * a.transpose() + extra)).abs().max() < 1e-10);
        assert!((m.cross_cov - &b.cov * a.transpose()).abs().max() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let s = generate_sigma_points(&std_normal_1d(), 2.0).unwrap();
        let err = unscented_transform(
            &s,
            |x| if x[0] > 0.0 { dvector![1.0, 2.0] } else { dvector![1.0] },
            None,
        )
        .unwrap_err();
        assert!(matches!(err, FilterError::DimensionMismatch { .. }));
    }

    #[test]
    fn counter_counts_generations() {
        let before = sigma_generation_count();
        generate_sigma_points(&std_normal_1d(), 2.0).unwrap();
        generate_sigma_points(&std_normal_1d(), 2.0).unwrap();
        assert_eq!(sigma_generation_count() - before, 2);
    }
}
