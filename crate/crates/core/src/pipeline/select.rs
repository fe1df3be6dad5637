//! Feature selection: variance threshold, feature groups, univariate
//! Mann-Whitney screen and PCA.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::mann_whitney_u;
use crate::model::FeatureGroup;
use crate::pipeline::Matrix;

pub const VARIANCE_THRESHOLD: f64 = 0.01;

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
}

/// Columns with variance ≥ 0.01.
pub fn variance_threshold(x: &Matrix) -> Result<Vec<usize>> {
    let keep: Vec<usize> = (0..x.cols)
        .filter(|&j| population_variance(&x.column(j)) >= VARIANCE_THRESHOLD)
        .collect();
    if keep.is_empty() {
        return Err(Error::Degenerate("every feature has variance below 0.01".into()));
    }
    Ok(keep)
}

/// Columns whose group tag is switched on.
pub fn groupwise_select(groups: &[FeatureGroup], enabled: &[FeatureGroup]) -> Result<Vec<usize>> {
    let keep: Vec<usize> = (0..groups.len()).filter(|&j| enabled.contains(&groups[j])).collect();
    if keep.is_empty() {
        return Err(Error::Degenerate("all feature groups are switched off".into()));
    }
    Ok(keep)
}

/// Columns whose two-sided Mann-Whitney p-value between classes is below `threshold`.
pub fn univariate_select(x: &Matrix, y: &[u8], threshold: f64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 1).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("univariate selection needs both classes"));
    }
    let mut keep = Vec::new();
    for j in 0..x.cols {
        let a: Vec<f64> = pos.iter().map(|&i| x.get(i, j)).collect();
        let b: Vec<f64> = neg.iter().map(|&i| x.get(i, j)).collect();
        if mann_whitney_u(&a, &b)?.1 < threshold {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::Degenerate(format!("no feature has Mann-Whitney p < {threshold}")));
    }
    Ok(keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PcaMode {
    Variance95,
    Fixed { k: usize },
}

/// Centered PCA basis; `components` is `k × d`, rows orthonormal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &Matrix, mode: PcaMode) -> Result<Self> {
        if x.rows < 2 {
            return Err(Error::invalid("PCA needs at least 2 rows"));
        }
        let d = x.cols;
        let mean: Vec<f64> = (0..d).map(|j| x.column(j).iter().sum::<f64>() / x.rows as f64).collect();
        let mut c = x.clone();
        for i in 0..c.rows {
            for (v, m) in c.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        let svd = c.to_dmatrix().svd(false, true);
        let vt = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
        let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let smax = s.first().copied().unwrap_or(0.0);
        let rank = s.iter().filter(|&&v| v > 1e-10 * smax.max(f64::MIN_POSITIVE)).count();
        if rank == 0 {
            return Err(Error::Degenerate("PCA input has no variance".into()));
        }
        let var: Vec<f64> = s.iter().map(|v| v * v / (x.rows as f64 - 1.0)).collect();
        let k = match mode {
            PcaMode::Fixed { k } => k.min(rank).max(1),
            PcaMode::Variance95 => {
                let total: f64 = var[..rank].iter().sum();
                let mut acc = 0.0;
                let mut k = rank;
                for (i, v) in var[..rank].iter().enumerate() {
                    acc += v;
                    if acc >= 0.95 * total {
                        k = i + 1;
                        break;
                    }
                }
                k
            }
        };
        let mut comp = Vec::with_capacity(k * d);
        for &i in &order[..k] {
            // sign convention: largest-magnitude loading positive
            let row: Vec<f64> = (0..d).map(|j| vt[(i, j)]).collect();
            let pivot = row.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            comp.extend(row.iter().map(|v| v * sign));
        }
        Ok(Self { mean, components: Matrix::new(k, d, comp), explained_variance: var[..k].to_vec() })
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let k = self.components.rows;
        let mut out = Matrix::zeros(x.rows, k);
        for i in 0..x.rows {
            let r = x.row(i);
            for c in 0..k {
                let comp = self.components.row(c);
                let v: f64 = r.iter().zip(&self.mean).zip(comp).map(|((a, m), w)| (a - m) * w).sum();
                out.set(i, c, v);
            }
        }
        out
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Matrix {
        let d = self.components.cols;
        let mut out = Matrix::zeros(z.rows, d);
        for i in 0..z.rows {
            let row = out.row_mut(i);
            row.copy_from_slice(&self.mean);
            for (c, &w) in z.row(i).iter().enumerate() {
                for (o, comp) in row.iter_mut().zip(self.components.row(c)) {
                    *o += w * comp;
                }
            }
        }
        out
    }
}
