//! Robust z-scoring on the 5th–95th percentile range.

use serde::{Deserialize, Serialize};

use crate::features::stats::percentile_sorted;
use crate::pipeline::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustZScore {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Mean and population std of the observed values within `[P5, P95]`.
pub fn trimmed_moments(values: &[f64]) -> (f64, f64) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (0.0, 1.0);
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let lo = percentile_sorted(&v, 0.05);
    let hi = percentile_sorted(&v, 0.95);
    let kept: Vec<f64> = v.into_iter().filter(|&x| x >= lo && x <= hi).collect();
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let sd = (kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

impl RobustZScore {
    pub fn fit(x: &Matrix) -> Self {
        let (mean, scale) = (0..x.cols).map(|j| trimmed_moments(&x.column(j))).unzip();
        Self { mean, scale }
    }

    /// Missing cells stay missing.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..x.rows {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimmed_example() {
        let col: Vec<f64> = (0..=100).map(|v| v as f64).collect();
        let (m, s) = trimmed_moments(&col);
        assert_eq!(m, 50.0);
        let kept: Vec<f64> = (5..=95).map(|v| v as f64).collect();
        let sd = (kept.iter().map(|x| (x - 50.0f64).powi(2)).sum::<f64>() / kept.len() as f64).sqrt();
        assert!((s - sd).abs() < 1e-12);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let x = Matrix::new(4, 1, vec![3.0; 4]);
        let z = RobustZScore::fit(&x).apply(&x);
        assert!(z.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn training_data_is_centered() {
        let x = Matrix::new(50, 1, (0..50).map(|i| ((i * 37) % 50) as f64 * 0.3 + 2.0).collect());
        let z = RobustZScore::fit(&x).apply(&x);
        assert!(trimmed_moments(&z.column(0)).0.abs() < 1e-10);
    }
}
