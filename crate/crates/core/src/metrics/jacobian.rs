use nalgebra::{DMatrix, DVector};

/// Relative step of the central differences: `1e-5 · (1 + ‖x‖)` on every coordinate.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

/// Central finite-difference Jacobian of `map` at `x`.
pub fn finite_difference_jacobian<F>(mut map: F, x: &DVector<f64>) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let step = FD_RELATIVE_STEP * (1.0 + x.norm());
    let n = x.len();
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[i] += step;
        minus[i] -= step;
        columns.push((map(&plus) - map(&minus)) / (2.0 * step));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, n, |r, c| columns[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn quadratic_map_matches_analytic() {
        // f(x) = [x0² + x0 x1, 3 x1² - x0]
        let map = |x: &DVector<f64>| dvector![x[0] * x[0] + x[0] * x[1], 3.0 * x[1] * x[1] - x[0]];
        let x = dvector![1.3, -0.7];
        let analytic = dmatrix![2.0 * x[0] + x[1], x[0]; -1.0, 6.0 * x[1]];
        let fd = finite_difference_jacobian(map, &x);
        assert!((fd - analytic).abs().max() <= 1e-6);
    }
}
