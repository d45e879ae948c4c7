//! Recursive Cramér-Rao lower bound.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::iukf::iukf_transition;
use crate::linalg::{stack, symmetrize};
use crate::model::AdversarialScenario;

use super::jacobian::finite_difference_jacobian;

/// Fisher information matrix `J` together with its inverse, the bound matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    j: DMatrix<f64>,
    bound: DMatrix<f64>,
}

/// Process-noise condition number above which the information form is skipped.
pub const INFORMATION_FORM_MAX_CONDITION: f64 = 1e8;

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = symmetrize(m).cholesky()?.inverse();
    inv.iter().all(|v| v.is_finite()).then(|| symmetrize(&inv))
}

/// Inverse through the eigendecomposition, for matrices too ill-conditioned for Cholesky.
fn eigen_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = symmetrize(m).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    inv.iter().all(|v| v.is_finite()).then(|| symmetrize(&inv))
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = symmetrize(m).symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

impl FisherInfo {
    /// `J₀ = Σ₀⁻¹`.
    pub fn from_covariance(cov: &DMatrix<f64>) -> Result<Self> {
        let j = spd_inverse(cov).ok_or(FilterError::SingularInformation)?;
        Ok(Self { j, bound: symmetrize(cov) })
    }

    pub fn from_information(j: &DMatrix<f64>) -> Result<Self> {
        let bound = spd_inverse(j).ok_or(FilterError::SingularInformation)?;
        Ok(Self { j: symmetrize(j), bound })
    }

    pub fn information(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// `J⁻¹`.
    pub fn bound_matrix(&self) -> &DMatrix<f64> {
        &self.bound
    }

    /// `√tr(J⁻¹)`.
    pub fn bound(&self) -> f64 {
        self.bound.trace().sqrt()
    }

    /// `√Σᵢ [J⁻¹]ᵢᵢ` over `indices`.
    pub fn bound_subset(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.bound[(i, i)]).sum::<f64>().sqrt()
    }
}

/// `J_{k+1}` from `J_k`, the transition Jacobian `F_k` at the true `x_k`, the
/// observation Jacobian `H_{k+1}` at the true `x_{k+1}`, and `(Q_k, R_{k+1})`.
///
/// With well-conditioned `Q` the information form
/// `HᵀR⁻¹H − Q⁻¹F(J + FᵀQ⁻¹F)⁻¹FᵀQ⁻¹ + Q⁻¹` is used. Otherwise the bound
/// matrix is propagated directly through the algebraically equivalent
/// `P = Q + FJ⁻¹Fᵀ`, `J⁻¹ ← P − PHᵀ(HPHᵀ + R)⁻¹HP`.
pub fn rcrlb_step(
    info: &FisherInfo,
    f: &DMatrix<f64>,
    h_next: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<FisherInfo> {
    let r_inv = spd_inverse(r).ok_or(FilterError::SingularInformation)?;
    let information_form = || {
        if condition_number(q) > INFORMATION_FORM_MAX_CONDITION {
            return None;
        }
        let q_inv = spd_inverse(q)?;
        let inner = &info.j + f.transpose() * &q_inv * f;
        let inner_inv = spd_inverse(&inner)?;
        let j = &q_inv - &q_inv * f * inner_inv * f.transpose() * &q_inv + h_next.transpose() * &r_inv * h_next;
        FisherInfo::from_information(&j).ok()
    };
    let covariance_form = || {
        let p = symmetrize(&(q + f * &info.bound * f.transpose()));
        let hp = h_next * &p;
        let s = spd_inverse(&(&hp * h_next.transpose() + r))?;
        let bound = symmetrize(&(&p - hp.transpose() * s * &hp));
        let j = eigen_inverse(&bound)?;
        Some(FisherInfo { j, bound })
    };
    let next = information_form()
        .or_else(covariance_form)
        .ok_or(FilterError::SingularInformation)?;
    if next.j.iter().chain(next.bound.iter()).all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(FilterError::SingularInformation)
    }
}

/// Jacobians of the scenario's `f` and `h`, analytic when supplied.
pub fn model_jacobians(model: &AdversarialScenario, x: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let f = match &model.jacobians.f {
        Some(j) => j(x),
        None => finite_difference_jacobian(|p| model.transition(p), x),
    };
    let h = match &model.jacobians.h {
        Some(j) => j(x),
        None => finite_difference_jacobian(|p| model.observe(p), x),
    };
    (f, h)
}

/// Bound sequence `J_0..J_K` for the forward filter along a true trajectory.
pub fn rcrlb_trajectory(
    model: &AdversarialScenario,
    truth: &[DVector<f64>],
    initial_cov: &DMatrix<f64>,
) -> Result<Vec<FisherInfo>> {
    let mut out = Vec::with_capacity(truth.len());
    out.push(FisherInfo::from_covariance(initial_cov)?);
    for k in 1..truth.len() {
        let (f, _) = model_jacobians(model, &truth[k - 1]);
        let (_, h) = model_jacobians(model, &truth[k]);
        let next = rcrlb_step(&out[k - 1], &f, &h, &model.q_at(k - 1), &model.r_at(k))?;
        out.push(next);
    }
    Ok(out)
}

/// Inverse-filter information update: the same recursion driven by the
/// inverse transition Jacobian `F̃`, the Jacobian `G` of the defender
/// observation, the transition noise `Q̄ = K R Kᵀ` and `Σ_ε`.
pub fn rcrlb_for_inverse(
    info: &FisherInfo,
    f_tilde: &DMatrix<f64>,
    g_next: &DMatrix<f64>,
    forward_gain: &DMatrix<f64>,
    r: &DMatrix<f64>,
    sigma_eps: &DMatrix<f64>,
) -> Result<FisherInfo> {
    let q_bar = symmetrize(&(forward_gain * r * forward_gain.transpose()));
    rcrlb_step(info, f_tilde, g_next, &q_bar, sigma_eps)
}

/// `F̃ = ∂x̂_{k+1}/∂x̂_k` of the attacker's update with the noise slot at zero,
/// by central differences on [`iukf_transition`].
pub fn inverse_transition_jacobian(
    model: &AdversarialScenario,
    x_hat: &DVector<f64>,
    forward_cov: &DMatrix<f64>,
    x_next: &DVector<f64>,
    forward_kappa: f64,
    step_index: usize,
) -> Result<DMatrix<f64>> {
    let noise = DVector::zeros(model.dims.n_y);
    let mut failure = None;
    let jac = finite_difference_jacobian(
        |p| match iukf_transition(&stack(p, &noise), forward_cov, x_next, model, forward_kappa, step_index) {
            Ok(out) => out.x_hat_next,
            Err(e) => {
                failure.get_or_insert(e);
                DVector::from_element(model.dims.n_x, f64::NAN)
            }
        },
        x_hat,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(jac),
    }
}
