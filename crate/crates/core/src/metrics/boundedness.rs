//! Empirical check of exponential mean-square boundedness
//! `E‖ζ_k‖² ≤ η E‖ζ₀‖² λᵏ + ν`.
//!
//! The envelope `c λᵏ + ν` (with `c = η E‖ζ₀‖²`, `c, ν ≥ 0`) is fitted to the
//! Monte-Carlo mean-square curve by least squares over a grid of
//! `λ ∈ [0, 1.5]`. A best fit with `λ ≥ 1` means the curve grows, unless the
//! growing term is still within 5% of `ν` at the last step (noise at the
//! tail), in which case the fit is redone over `λ < 1`. On PASS, `ν` is raised
//! until `1.05 (c λᵏ + ν)` dominates every point.

use nalgebra::DVector;

use crate::error::{FilterError, Result};

pub const MIN_BOUNDEDNESS_RUNS: usize = 100;
pub const MIN_BOUNDEDNESS_HORIZON: usize = 50;
const SLACK: f64 = 0.05;
const LAMBDA_MAX: f64 = 1.5;
const LAMBDA_GRID: usize = 1500;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessReport {
    pub eta: f64,
    pub lambda: f64,
    pub nu: f64,
    pub pass: bool,
    /// Mean-square error curve that was fitted.
    pub mean_square: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Fit {
    lambda: f64,
    /// Coefficient of `λᵏ` at `k = 0`.
    c: f64,
    nu: f64,
    sse: f64,
}

impl Fit {
    fn envelope(&self, k: usize) -> f64 {
        self.c * self.lambda.powi(k as i32) + self.nu
    }
}

/// Nonnegative least squares of `m ≈ c·u + ν` for a fixed basis `u`.
fn fit_fixed_lambda(m: &[f64], lambda: f64) -> Option<Fit> {
    let n = m.len();
    let top = if lambda > 1.0 { lambda.powi(n as i32 - 1) } else { 1.0 };
    if !top.is_finite() {
        return None;
    }
    let u: Vec<f64> = (0..n).map(|k| lambda.powi(k as i32) / top).collect();
    let nf = n as f64;
    let su: f64 = u.iter().sum();
    let suu: f64 = u.iter().map(|v| v * v).sum();
    let sm: f64 = m.iter().sum();
    let sum_: f64 = u.iter().zip(m).map(|(a, b)| a * b).sum();
    let sse = |c: f64, nu: f64| u.iter().zip(m).map(|(a, b)| (b - c * a - nu).powi(2)).sum::<f64>();

    let mut candidates = vec![(0.0, (sm / nf).max(0.0))];
    if suu > 0.0 {
        candidates.push(((sum_ / suu).max(0.0), 0.0));
    }
    let det = nf * suu - su * su;
    if det.abs() > 1e-12 * nf * suu.max(1.0) {
        let c = (nf * sum_ - su * sm) / det;
        let nu = (sm - c * su) / nf;
        if c >= 0.0 && nu >= 0.0 {
            candidates.push((c, nu));
        }
    }
    candidates
        .into_iter()
        .map(|(c, nu)| Fit {
            lambda,
            c: c / top,
            nu,
            sse: sse(c, nu),
        })
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
}

fn best_fit(m: &[f64], below_one: bool) -> Option<Fit> {
    let mut best: Option<Fit> = None;
    for i in 0..=LAMBDA_GRID {
        let lambda = LAMBDA_MAX * i as f64 / LAMBDA_GRID as f64;
        if below_one && lambda >= 1.0 {
            break;
        }
        if let Some(fit) = fit_fixed_lambda(m, lambda) {
            if best.is_none_or(|b| fit.sse < b.sse) {
                best = Some(fit);
            }
        }
    }
    best
}

/// Fits the envelope to `errors[run][step]`.
pub fn boundedness_probe(errors: &[Vec<DVector<f64>>]) -> Result<BoundednessReport> {
    if errors.len() < MIN_BOUNDEDNESS_RUNS {
        return Err(FilterError::InsufficientRuns {
            required: MIN_BOUNDEDNESS_RUNS,
            got: errors.len(),
        });
    }
    let steps = errors[0].len();
    if steps < MIN_BOUNDEDNESS_HORIZON || errors.iter().any(|r| r.len() != steps) {
        return Err(FilterError::DegenerateInputs(format!(
            "boundedness needs aligned runs of at least {MIN_BOUNDEDNESS_HORIZON} steps"
        )));
    }
    let runs = errors.len() as f64;
    let mean_square: Vec<f64> = (0..steps)
        .map(|k| errors.iter().map(|r| r[k].norm_squared()).sum::<f64>() / runs)
        .collect();
    Ok(fit_envelope(mean_square))
}

/// Envelope fit of an already aggregated mean-square curve.
pub fn fit_envelope(mean_square: Vec<f64>) -> BoundednessReport {
    let failed = |mean_square| BoundednessReport {
        eta: f64::NAN,
        lambda: f64::NAN,
        nu: f64::INFINITY,
        pass: false,
        mean_square,
    };
    if mean_square.iter().any(|v| !v.is_finite()) {
        return failed(mean_square);
    }
    let Some(overall) = best_fit(&mean_square, false) else {
        return failed(mean_square);
    };
    let last = mean_square.len() - 1;
    let (fit, pass) = if overall.lambda < 1.0 {
        (overall, true)
    } else if overall.c * overall.lambda.powi(last as i32) <= SLACK * overall.nu {
        match best_fit(&mean_square, true) {
            Some(f) => (f, true),
            None => (overall, false),
        }
    } else {
        (overall, false)
    };
    let nu = if pass {
        mean_square
            .iter()
            .enumerate()
            .map(|(k, m)| m / (1.0 + SLACK) - fit.c * fit.lambda.powi(k as i32))
            .fold(fit.nu, f64::max)
    } else {
        fit.nu
    };
    let eta = if fit.c == 0.0 { 0.0 } else { fit.c / mean_square[0] };
    debug_assert!(!pass || (0..=last).all(|k| mean_square[k] <= (1.0 + SLACK) * Fit { nu, ..fit }.envelope(k) + 1e-12));
    BoundednessReport {
        eta,
        lambda: fit.lambda,
        nu,
        pass,
        mean_square,
    }
}
