//! Gaussian naive Bayes and ridge-regularized linear and quadratic discriminants.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::logistic::sigmoid;
use crate::pipeline::Matrix;

pub const NB_VAR_SMOOTHING: f64 = 1e-9;
/// Relative ridge applied when the requested shrinkage is zero.
pub const RIDGE_FLOOR: f64 = 1e-6;

fn split_classes(x: &Matrix, y: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &l) in y.iter().enumerate().take(x.rows) {
        out[usize::from(l == 1)].push(i);
    }
    out
}

fn mean_of(x: &Matrix, rows: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; x.cols];
    for &i in rows {
        for (a, v) in m.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= rows.len().max(1) as f64);
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub means: [Vec<f64>; 2],
    pub vars: [Vec<f64>; 2],
    pub log_prior: [f64; 2],
}

impl NaiveBayes {
    pub fn fit(x: &Matrix, y: &[u8]) -> Result<Self> {
        let cls = split_classes(x, y);
        if cls.iter().any(Vec::is_empty) {
            return Err(Error::degenerate("naive Bayes needs both classes"));
        }
        let all: Vec<usize> = (0..x.rows).collect();
        let gm = mean_of(x, &all);
        let max_var = (0..x.cols)
            .map(|j| all.iter().map(|&i| (x.get(i, j) - gm[j]).powi(2)).sum::<f64>() / x.rows as f64)
            .fold(0.0, f64::max);
        let eps = NB_VAR_SMOOTHING * max_var;
        let stats = |rows: &[usize]| {
            let m = mean_of(x, rows);
            let v: Vec<f64> = (0..x.cols)
                .map(|j| rows.iter().map(|&i| (x.get(i, j) - m[j]).powi(2)).sum::<f64>() / rows.len() as f64 + eps)
                .collect();
            (m, v)
        };
        let (m0, v0) = stats(&cls[0]);
        let (m1, v1) = stats(&cls[1]);
        if v0.iter().chain(&v1).any(|&v| v <= 0.0) {
            return Err(Error::degenerate("naive Bayes with zero variance"));
        }
        let n = x.rows as f64;
        Ok(Self {
            means: [m0, m1],
            vars: [v0, v1],
            log_prior: [(cls[0].len() as f64 / n).ln(), (cls[1].len() as f64 / n).ln()],
        })
    }

    fn log_joint(&self, c: usize, row: &[f64]) -> f64 {
        self.log_prior[c]
            - 0.5
                * row
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.vars[c])
                    .map(|((x, m), v)| (2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v)
                    .sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows).map(|i| sigmoid(self.log_joint(1, x.row(i)) - self.log_joint(0, x.row(i)))).collect()
    }
}

/// Orthonormal coordinates for the span of the centered training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub center: Vec<f64>,
    /// `None` keeps the original axes.
    pub basis: Option<Matrix>,
}

impl Span {
    fn fit(x: &Matrix) -> Self {
        let all: Vec<usize> = (0..x.rows).collect();
        let center = mean_of(x, &all);
        if x.cols < x.rows {
            return Self { center, basis: None };
        }
        let mut c = x.clone();
        for i in 0..c.rows {
            for (v, m) in c.row_mut(i).iter_mut().zip(&center) {
                *v -= m;
            }
        }
        let svd = c.to_dmatrix().svd(false, true);
        let vt = svd.v_t.expect("requested V^T");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| smax > 0.0 && svd.singular_values[i] > 1e-10 * smax)
            .collect();
        let mut b = Matrix::zeros(keep.len(), x.cols);
        for (r, &k) in keep.iter().enumerate() {
            for j in 0..x.cols {
                b.set(r, j, vt[(k, j)]);
            }
        }
        Self { center, basis: Some(b) }
    }

    fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.center.len(), |b| b.rows)
    }

    /// Span coordinates and the squared norm of the orthogonal remainder.
    fn coords(&self, row: &[f64]) -> (DVector<f64>, f64) {
        let c: Vec<f64> = row.iter().zip(&self.center).map(|(a, m)| a - m).collect();
        match &self.basis {
            None => (DVector::from_vec(c), 0.0),
            Some(b) => {
                let z: Vec<f64> = (0..b.rows).map(|k| b.row(k).iter().zip(&c).map(|(u, v)| u * v).sum()).collect();
                let total: f64 = c.iter().map(|v| v * v).sum();
                let inside: f64 = z.iter().map(|v| v * v).sum();
                (DVector::from_vec(z), (total - inside).max(0.0))
            }
        }
    }
}

fn ridge(trace: f64, d: usize, shrinkage: f64) -> f64 {
    let avg = trace / d as f64;
    let r = (shrinkage * avg).max(RIDGE_FLOOR * avg);
    if r > 0.0 {
        r
    } else {
        RIDGE_FLOOR
    }
}

fn scatter(z: &[DVector<f64>], mean: &DVector<f64>, r: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(r, r);
    for v in z {
        let d = v - mean;
        s += &d * d.transpose();
    }
    s
}

fn class_means(z: &[DVector<f64>], rows: &[usize], r: usize) -> DVector<f64> {
    let mut m = DVector::zeros(r);
    for &i in rows {
        m += &z[i];
    }
    m / rows.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lda {
    pub span: Span,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Lda {
    pub fn fit(x: &Matrix, y: &[u8], shrinkage: f64) -> Result<Self> {
        let cls = split_classes(x, y);
        if cls.iter().any(|c| c.len() < 2) {
            return Err(Error::degenerate("discriminant analysis needs two samples per class"));
        }
        let span = Span::fit(x);
        let r = span.dim();
        let z: Vec<DVector<f64>> = (0..x.rows).map(|i| span.coords(x.row(i)).0).collect();
        let m0 = class_means(&z, &cls[0], r);
        let m1 = class_means(&z, &cls[1], r);
        let s0: Vec<DVector<f64>> = cls[0].iter().map(|&i| z[i].clone()).collect();
        let s1: Vec<DVector<f64>> = cls[1].iter().map(|&i| z[i].clone()).collect();
        let mut cov = (scatter(&s0, &m0, r) + scatter(&s1, &m1, r)) / (x.rows - 2).max(1) as f64;
        let lam = ridge(cov.trace(), x.cols, shrinkage);
        for k in 0..r {
            cov[(k, k)] += lam;
        }
        let diff = &m1 - &m0;
        let w = cov
            .cholesky()
            .map(|c| c.solve(&diff))
            .ok_or_else(|| Error::degenerate("singular LDA covariance"))?;
        let n = x.rows as f64;
        let b = -0.5 * (&m0 + &m1).dot(&w) + (cls[1].len() as f64 / n).ln() - (cls[0].len() as f64 / n).ln();
        let weights = match &span.basis {
            None => w.iter().copied().collect(),
            Some(basis) => {
                let mut out = vec![0.0; x.cols];
                for k in 0..r {
                    for (o, u) in out.iter_mut().zip(basis.row(k)) {
                        *o += w[k] * u;
                    }
                }
                out
            }
        };
        let intercept = b - weights.iter().zip(&span.center).map(|(a, c)| a * c).sum::<f64>();
        Ok(Self { span, weights, intercept })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows).map(|i| sigmoid(self.decision(x.row(i)))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaClass {
    pub mean: Vec<f64>,
    /// Inverse of the regularized covariance inside the span.
    pub precision: Vec<f64>,
    pub log_det: f64,
    pub ridge: f64,
    pub log_prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qda {
    pub span: Span,
    pub dim: usize,
    pub classes: [QdaClass; 2],
}

impl Qda {
    pub fn fit(x: &Matrix, y: &[u8], shrinkage: f64) -> Result<Self> {
        let cls = split_classes(x, y);
        if cls.iter().any(|c| c.len() < 2) {
            return Err(Error::degenerate("discriminant analysis needs two samples per class"));
        }
        let span = Span::fit(x);
        let r = span.dim();
        let z: Vec<DVector<f64>> = (0..x.rows).map(|i| span.coords(x.row(i)).0).collect();
        let n = x.rows as f64;
        let fit_class = |rows: &[usize]| -> Result<QdaClass> {
            let m = class_means(&z, rows, r);
            let s: Vec<DVector<f64>> = rows.iter().map(|&i| z[i].clone()).collect();
            let mut cov = scatter(&s, &m, r) / (rows.len() - 1) as f64;
            let lam = ridge(cov.trace(), x.cols, shrinkage);
            for k in 0..r {
                cov[(k, k)] += lam;
            }
            let ch = cov.cholesky().ok_or_else(|| Error::degenerate("singular QDA covariance"))?;
            let log_det = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let inv = ch.inverse();
            Ok(QdaClass {
                mean: m.iter().copied().collect(),
                precision: inv.iter().copied().collect(),
                log_det,
                ridge: lam,
                log_prior: (rows.len() as f64 / n).ln(),
            })
        };
        let classes = [fit_class(&cls[0])?, fit_class(&cls[1])?];
        Ok(Self { span, dim: x.cols, classes })
    }

    fn score(&self, c: &QdaClass, z: &DVector<f64>, rest: f64) -> f64 {
        let r = z.len();
        let d = z - DVector::from_column_slice(&c.mean);
        let p = DMatrix::from_column_slice(r, r, &c.precision);
        let outside = (self.dim - r) as f64;
        c.log_prior - 0.5 * (d.dot(&(p * &d)) + c.log_det + rest / c.ridge + outside * c.ridge.ln())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows)
            .map(|i| {
                let (z, rest) = self.span.coords(x.row(i));
                sigmoid(self.score(&self.classes[1], &z, rest) - self.score(&self.classes[0], &z, rest))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_pair() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for &(dx, dy) in &[(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            rows.push(vec![-3.0 + dx, 1.0 + dy]);
            y.push(0);
            rows.push(vec![3.0 + dx, 1.0 + dy]);
            y.push(1);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn lda_boundary_is_the_midpoint() {
        let (x, y) = symmetric_pair();
        let m = Lda::fit(&x, &y, 0.0).unwrap();
        assert!(m.decision(&[0.0, 5.0]).abs() < 1e-9);
        assert!(m.decision(&[0.1, -2.0]) > 0.0);
        assert!(m.decision(&[-0.1, 7.0]) < 0.0);
    }

    #[test]
    fn nb_boundary_for_equal_variances() {
        let (x, y) = symmetric_pair();
        let m = NaiveBayes::fit(&x, &y).unwrap();
        let p = m.predict_proba(&Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 1.0], vec![-0.5, 1.0]]));
        assert!((p[0] - 0.5).abs() < 1e-9);
        assert!(p[1] > 0.5 && p[2] < 0.5);
    }

    #[test]
    fn qda_matches_lda_on_shared_covariance() {
        let (x, y) = symmetric_pair();
        let m = Qda::fit(&x, &y, 0.0).unwrap();
        let p = m.predict_proba(&Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]));
        assert!((p[0] - 0.5).abs() < 1e-9);
        assert!(p[1] > 0.5);
    }

    #[test]
    fn wide_data_stays_finite() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| (0..30).map(|j| ((i * 31 + j * 7) % 13) as f64 + if i % 2 == 1 { 2.0 } else { 0.0 }).collect()).collect();
        let y: Vec<u8> = (0..8).map(|i| (i % 2) as u8).collect();
        let x = Matrix::from_rows(&rows);
        for p in Lda::fit(&x, &y, 0.1).unwrap().predict_proba(&x).into_iter().chain(Qda::fit(&x, &y, 0.1).unwrap().predict_proba(&x)) {
            assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn single_sample_class_is_degenerate() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert!(matches!(Lda::fit(&x, &[0, 0, 1], 0.0), Err(Error::Degenerate(_))));
    }
}
