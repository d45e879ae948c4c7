use nalgebra::DVector;

use crate::error::{FilterError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RmseReport {
    /// `√(mean_m ‖x̃_{m,k}‖²)` for each step.
    pub per_step: Vec<f64>,
    /// Mean of `per_step`.
    pub time_averaged: f64,
    /// Component-wise RMSE for each step.
    pub per_component: Vec<DVector<f64>>,
}

/// Aggregates `errors[run][step]` into RMSE curves. Runs must have equal length.
pub fn rmse_trace(errors: &[Vec<DVector<f64>>]) -> Result<RmseReport> {
    let steps = errors.first().map_or(0, Vec::len);
    if steps == 0 {
        return Err(FilterError::EmptyInput);
    }
    if let Some(bad) = errors.iter().find(|r| r.len() != steps) {
        return Err(FilterError::DimensionMismatch {
            expected: steps,
            got: bad.len(),
            context: "run length",
        });
    }
    let runs = errors.len() as f64;
    let mut per_step = Vec::with_capacity(steps);
    let mut per_component = Vec::with_capacity(steps);
    for k in 0..steps {
        let n = errors[0][k].len();
        let mut sq = DVector::zeros(n);
        for run in errors {
            sq += run[k].component_mul(&run[k]);
        }
        sq /= runs;
        per_step.push(sq.sum().sqrt());
        per_component.push(sq.map(f64::sqrt));
    }
    let time_averaged = per_step.iter().sum::<f64>() / steps as f64;
    Ok(RmseReport {
        per_step,
        time_averaged,
        per_component,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn fixtures() {
        assert_eq!(rmse_trace(&[vec![dvector![0.0, 0.0]]]).unwrap().time_averaged, 0.0);
        assert_eq!(rmse_trace(&[vec![dvector![3.0, 4.0]]]).unwrap().per_step[0], 5.0);
        let two = rmse_trace(&[vec![dvector![1.0]], vec![dvector![7.0]]]).unwrap();
        assert_eq!(two.per_step[0], 5.0);
        assert!(matches!(rmse_trace(&[]), Err(FilterError::EmptyInput)));
    }
}
