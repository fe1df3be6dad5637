//! Missing-value imputation.

use serde::{Deserialize, Serialize};

use crate::features::stats::percentile_sorted;
use crate::pipeline::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputerKind {
    Mean,
    Median,
    MostFrequent,
    Knn { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Imputer {
    /// Per-column fill value.
    Constant(Vec<f64>),
    /// Training rows (already scaled) and the neighbour count; `fallback`
    /// fills when no donor has the feature.
    Knn { k: usize, donors: Matrix, fallback: Vec<f64> },
}

fn observed(col: &[f64]) -> Vec<f64> {
    col.iter().copied().filter(|v| !v.is_nan()).collect()
}

fn column_fill(col: &[f64], kind: ImputerKind) -> f64 {
    let mut v = observed(col);
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    match kind {
        ImputerKind::Median => percentile_sorted(&v, 0.5),
        ImputerKind::MostFrequent => {
            // smallest value among the most frequent
            let (mut best, mut best_n) = (v[0], 0);
            let mut i = 0;
            while i < v.len() {
                let mut j = i;
                while j < v.len() && v[j] == v[i] {
                    j += 1;
                }
                if j - i > best_n {
                    best = v[i];
                    best_n = j - i;
                }
                i = j;
            }
            best
        }
        _ => v.iter().sum::<f64>() / v.len() as f64,
    }
}

impl Imputer {
    pub fn fit(x: &Matrix, kind: ImputerKind) -> Self {
        let fill: Vec<f64> = (0..x.cols)
            .map(|j| column_fill(&x.column(j), if let ImputerKind::Knn { .. } = kind { ImputerKind::Mean } else { kind }))
            .collect();
        match kind {
            ImputerKind::Knn { k } => Imputer::Knn { k, donors: x.clone(), fallback: fill },
            _ => Imputer::Constant(fill),
        }
    }

    /// Observed cells are returned unchanged.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        match self {
            Imputer::Constant(fill) => {
                for v in out.data.iter_mut().enumerate().filter(|(_, v)| v.is_nan()) {
                    *v.1 = fill[v.0 % x.cols];
                }
            }
            Imputer::Knn { k, donors, fallback } => {
                for i in 0..x.rows {
                    let row = x.row(i);
                    if !row.iter().any(|v| v.is_nan()) {
                        continue;
                    }
                    let dist: Vec<f64> = (0..donors.rows).map(|d| nan_euclidean(row, donors.row(d))).collect();
                    for j in (0..x.cols).filter(|&j| row[j].is_nan()) {
                        let mut cand: Vec<(f64, usize)> = (0..donors.rows)
                            .filter(|&d| !donors.get(d, j).is_nan() && dist[d].is_finite())
                            .map(|d| (dist[d], d))
                            .collect();
                        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                        cand.truncate(*k);
                        let v = if cand.is_empty() {
                            fallback[j]
                        } else {
                            cand.iter().map(|&(_, d)| donors.get(d, j)).sum::<f64>() / cand.len() as f64
                        };
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }
}

/// Euclidean distance over co-observed coordinates, scaled up by the
/// fraction observed; infinite when nothing is co-observed.
pub fn nan_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut present = 0usize;
    for (x, y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            s += (x - y) * (x - y);
            present += 1;
        }
    }
    if present == 0 {
        return f64::INFINITY;
    }
    (s * a.len() as f64 / present as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAN: f64 = f64::NAN;

    #[test]
    fn simple_fills() {
        let x = Matrix::new(3, 1, vec![1.0, NAN, 3.0]);
        assert_eq!(Imputer::fit(&x, ImputerKind::Mean).apply(&x).data, vec![1.0, 2.0, 3.0]);
        let x = Matrix::new(4, 1, vec![1.0, 1.0, 2.0, NAN]);
        assert_eq!(Imputer::fit(&x, ImputerKind::MostFrequent).apply(&x).data[3], 1.0);
        let x = Matrix::new(4, 1, vec![1.0, 5.0, 2.0, NAN]);
        assert_eq!(Imputer::fit(&x, ImputerKind::Median).apply(&x).data[3], 2.0);
    }

    #[test]
    fn knn_uses_nearest_donor() {
        let train = Matrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 8.0]]);
        let imp = Imputer::fit(&train, ImputerKind::Knn { k: 1 });
        let q = Matrix::from_rows(&[vec![10.0, NAN]]);
        assert_eq!(imp.apply(&q).data, vec![10.0, 8.0]);
    }
}
