//! Approximate online EM updates for the kernel coefficient matrices and the
//! noise covariances.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::linalg::{clip_spectral_norm, floor_eigenvalues, symmetrize};

pub const COVARIANCE_FLOOR: f64 = 1e-10;
/// Diagonal seed for Gram rows added when the dictionary grows.
pub const GRAM_SEED: f64 = 1e-8;
/// Relative ridge (times trace / L) added before solving against a Gram sum.
pub const GRAM_RIDGE: f64 = 1e-8;

/// Spectral-norm caps applied to `Â` and `B̂` after every solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub a_bar: f64,
    pub b_bar: f64,
}

impl Default for NormBounds {
    fn default() -> Self {
        Self {
            a_bar: 1e3,
            b_bar: 1e3,
        }
    }
}

/// How the observation moments `E[yΦᵀ]`, `E[yyᵀ]` entering the `B̂`/`R̂`
/// updates are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMoments {
    /// `E[yΦᵀ] = B̂ E[ΦΦᵀ]`, `E[yyᵀ] = B̂ E[ΦΦᵀ] B̂ᵀ + R̂_{k-1}` from the current model.
    ModelImplied,
    /// `E[yΦᵀ] = y E[Φ]ᵀ`, `E[yyᵀ] = y yᵀ` from the received observation.
    #[default]
    Observed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkhsParameterEstimate {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s_xphi: DMatrix<f64>,
    pub s_phi1: DMatrix<f64>,
    pub s_yphi: DMatrix<f64>,
    pub s_phi: DMatrix<f64>,
    pub bounds: NormBounds,
    /// Times the covariance eigenvalue floor had to be applied.
    pub floor_triggers: usize,
}

impl RkhsParameterEstimate {
    /// Coefficients filled with `fill`, partial sums zero, for a dictionary of size `l`.
    pub fn new(n_x: usize, n_y: usize, l: usize, fill: f64, q0: DMatrix<f64>, r0: DMatrix<f64>, bounds: NormBounds) -> Self {
        Self {
            a: DMatrix::from_element(n_x, l, fill),
            b: DMatrix::from_element(n_y, l, fill),
            q: q0,
            r: r0,
            s_xphi: DMatrix::zeros(n_x, l),
            s_phi1: DMatrix::zeros(l, l),
            s_yphi: DMatrix::zeros(n_y, l),
            s_phi: DMatrix::zeros(l, l),
            bounds,
            floor_triggers: 0,
        }
    }

    pub fn dict_len(&self) -> usize {
        self.a.ncols()
    }

    /// Appends a zero column/row for a new atom, seeding the Gram diagonals.
    pub fn grow(&mut self) {
        let l = self.dict_len();
        self.a = std::mem::take(&mut self.a).insert_column(l, 0.0);
        self.b = std::mem::take(&mut self.b).insert_column(l, 0.0);
        self.s_xphi = std::mem::take(&mut self.s_xphi).insert_column(l, 0.0);
        self.s_yphi = std::mem::take(&mut self.s_yphi).insert_column(l, 0.0);
        for s in [&mut self.s_phi1, &mut self.s_phi] {
            let grown = std::mem::take(s).insert_column(l, 0.0).insert_row(l, 0.0);
            *s = grown;
            s[(l, l)] = GRAM_SEED;
        }
    }

    /// Drops everything tied to atom `index`.
    pub fn evict(&mut self, index: usize) {
        self.a = std::mem::take(&mut self.a).remove_column(index);
        self.b = std::mem::take(&mut self.b).remove_column(index);
        self.s_xphi = std::mem::take(&mut self.s_xphi).remove_column(index);
        self.s_yphi = std::mem::take(&mut self.s_yphi).remove_column(index);
        for s in [&mut self.s_phi1, &mut self.s_phi] {
            let shrunk = std::mem::take(s).remove_column(index).remove_row(index);
            *s = shrunk;
        }
    }
}

/// Unscented approximations of the conditional expectations used by the EM step.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectations {
    /// `E[x_k x_kᵀ]`
    pub xx: DMatrix<f64>,
    /// `E[Φ(x_{k-1}) Φ(x_{k-1})ᵀ]`
    pub phi_prev_phi_prev: DMatrix<f64>,
    /// `E[x_k Φ(x_{k-1})ᵀ]`
    pub x_phi_prev: DMatrix<f64>,
    /// `E[Φ(x_k) Φ(x_k)ᵀ]`
    pub phi_phi: DMatrix<f64>,
    /// `E[Φ(x_k)]`
    pub phi_mean: DVector<f64>,
}

/// `S · (G + ridge·I)⁻¹` with `ridge = 1e-8 · tr(G) / L`.
fn ridge_solve(s: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = gram.nrows();
    let ridge = GRAM_RIDGE * gram.trace() / l as f64;
    let g = symmetrize(gram) + DMatrix::identity(l, l) * ridge;
    let st = s.transpose();
    let solved = match g.clone().cholesky() {
        Some(c) => c.solve(&st),
        None => g.lu().solve(&st).ok_or(FilterError::SingularGram)?,
    };
    if solved.iter().all(|v| v.is_finite()) {
        Ok(solved.transpose())
    } else {
        Err(FilterError::SingularGram)
    }
}

/// One approximate EM update at step `k ≥ 1` given the observation `y_k`.
pub fn rkhs_param_update(
    params: &RkhsParameterEstimate,
    e: &Expectations,
    y: &DVector<f64>,
    k: usize,
    mode: ObservationMoments,
) -> Result<RkhsParameterEstimate> {
    assert!(k >= 1, "EM steps are numbered from 1");
    let mut next = params.clone();
    let blend = 1.0 / k as f64;

    next.s_xphi += &e.x_phi_prev;
    next.s_phi1 += &e.phi_prev_phi_prev;
    let a = clip_spectral_norm(ridge_solve(&next.s_xphi, &next.s_phi1)?, params.bounds.a_bar);
    let q_term = &e.xx - &a * e.x_phi_prev.transpose() - &e.x_phi_prev * a.transpose()
        + &a * &e.phi_prev_phi_prev * a.transpose();
    let q = &params.q * (1.0 - blend) + q_term * blend;

    let y_phi = match mode {
        ObservationMoments::ModelImplied => &params.b * &e.phi_phi,
        ObservationMoments::Observed => y * e.phi_mean.transpose(),
    };
    next.s_yphi += &y_phi;
    next.s_phi += &e.phi_phi;
    let b = clip_spectral_norm(ridge_solve(&next.s_yphi, &next.s_phi)?, params.bounds.b_bar);
    let (y_phi, yy) = match mode {
        ObservationMoments::ModelImplied => {
            let y_phi = &b * &e.phi_phi;
            let yy = &y_phi * b.transpose() + &params.r;
            (y_phi, yy)
        }
        ObservationMoments::Observed => (y_phi, y * y.transpose()),
    };
    let r_term = yy - &b * y_phi.transpose() - &y_phi * b.transpose() + &b * &e.phi_phi * b.transpose();
    let r = &params.r * (1.0 - blend) + r_term * blend;

    let (q, q_hit) = floor_eigenvalues(&q, COVARIANCE_FLOOR);
    let (r, r_hit) = floor_eigenvalues(&r, COVARIANCE_FLOOR);
    next.floor_triggers += q_hit as usize + r_hit as usize;
    next.a = a;
    next.b = b;
    next.q = q;
    next.r = r;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_norm;
    use nalgebra::{dmatrix, dvector};

    fn unit_expectations() -> Expectations {
        Expectations {
            xx: dmatrix![2.0],
            phi_prev_phi_prev: dmatrix![0.5],
            x_phi_prev: dmatrix![0.6],
            phi_phi: dmatrix![0.4],
            phi_mean: dvector![0.6],
        }
    }

    #[test]
    fn first_step_discards_initial_noise() {
        let p = RkhsParameterEstimate::new(1, 1, 1, 1.0, dmatrix![7.0], dmatrix![9.0], NormBounds::default());
        let e = unit_expectations();
        let y = dvector![0.3];
        let next = rkhs_param_update(&p, &e, &y, 1, ObservationMoments::Observed).unwrap();
        let b = next.b[(0, 0)];
        let expected_r = 0.09 - 2.0 * b * 0.3 * 0.6 + b * b * 0.4;
        assert!((next.r[(0, 0)] - expected_r).abs() < 1e-12);
        let a = next.a[(0, 0)];
        let expected_q = 2.0 - 2.0 * a * 0.6 + a * a * 0.5;
        assert!((next.q[(0, 0)] - expected_q).abs() < 1e-12);
    }

    #[test]
    fn model_implied_moments_keep_b_and_r() {
        let p = RkhsParameterEstimate::new(1, 1, 1, 1.0, dmatrix![1.0], dmatrix![0.5], NormBounds::default());
        let next = rkhs_param_update(&p, &unit_expectations(), &dvector![3.0], 1, ObservationMoments::ModelImplied).unwrap();
        assert!((next.b[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((next.r[(0, 0)] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn clipping_projects_to_bound() {
        // unconstrained solve gives A = 0.6 / 0.5 * (1 - tiny ridge) ≈ 1.2; cap at 0.6
        let bounds = NormBounds { a_bar: 0.6, b_bar: 1e3 };
        let p = RkhsParameterEstimate::new(1, 1, 1, 1.0, dmatrix![1.0], dmatrix![1.0], bounds);
        let next = rkhs_param_update(&p, &unit_expectations(), &dvector![0.3], 1, ObservationMoments::Observed).unwrap();
        assert!((spectral_norm(&next.a) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn grow_and_evict_shapes() {
        let mut p = RkhsParameterEstimate::new(3, 1, 1, 1.0, DMatrix::identity(3, 3), dmatrix![1.0], NormBounds::default());
        p.s_phi1[(0, 0)] = 4.0;
        p.grow();
        assert_eq!(p.a.shape(), (3, 2));
        assert_eq!(p.a.column(1).sum(), 0.0);
        assert_eq!(p.s_phi1, dmatrix![4.0, 0.0; 0.0, GRAM_SEED]);
        assert_eq!(p.s_phi[(1, 1)], GRAM_SEED);
        p.evict(0);
        assert_eq!(p.a.shape(), (3, 1));
        assert_eq!(p.s_phi1, dmatrix![GRAM_SEED]);
        assert_eq!(p.s_yphi.shape(), (1, 1));
    }
}
