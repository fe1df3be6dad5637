//! L2-regularized logistic regression fitted by damped Newton iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::Matrix;

pub const MAX_ITER: usize = 500;
pub const GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `C · Σ logloss + ½‖w‖²` at `theta = [w, b]`; the intercept is not penalized.
pub fn objective(theta: &[f64], x: &Matrix, y: &[u8], c: f64) -> f64 {
    let d = x.cols;
    let (w, b) = (&theta[..d], theta[d]);
    let mut loss = 0.0;
    for i in 0..x.rows {
        let t: f64 = x.row(i).iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        loss += if y[i] == 1 { softplus(-t) } else { softplus(t) };
    }
    c * loss + 0.5 * w.iter().map(|v| v * v).sum::<f64>()
}

pub fn gradient(theta: &[f64], x: &Matrix, y: &[u8], c: f64) -> Vec<f64> {
    let d = x.cols;
    let (w, b) = (&theta[..d], theta[d]);
    let mut g: Vec<f64> = w.to_vec();
    g.push(0.0);
    for i in 0..x.rows {
        let row = x.row(i);
        let t: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let r = c * (sigmoid(t) - f64::from(y[i]));
        for (gj, a) in g.iter_mut().zip(row) {
            *gj += r * a;
        }
        g[d] += r;
    }
    g
}

fn newton(x: &Matrix, y: &[u8], c: f64) -> (Vec<f64>, usize) {
    let d = x.cols;
    let mut theta = vec![0.0; d + 1];
    let mut f = objective(&theta, x, y, c);
    for it in 0..MAX_ITER {
        let g = gradient(&theta, x, y, c);
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < GRAD_TOL {
            return (theta, it);
        }
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for j in 0..d {
            h[(j, j)] = 1.0;
        }
        for i in 0..x.rows {
            let row = x.row(i);
            let t: f64 = row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d];
            let p = sigmoid(t);
            let s = c * p * (1.0 - p);
            if s == 0.0 {
                continue;
            }
            for a in 0..=d {
                let xa = if a < d { row[a] } else { 1.0 };
                for b in a..=d {
                    let xb = if b < d { row[b] } else { 1.0 };
                    h[(a, b)] += s * xa * xb;
                }
            }
        }
        for a in 0..=d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        // tiny jitter keeps the intercept direction solvable when all p saturate
        h[(d, d)] += 1e-12;
        let gv = DVector::from_vec(g.clone());
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&gv),
            None => match h.lu().solve(&gv) {
                Some(s) => s,
                None => return (theta, it),
            },
        };
        let slope: f64 = -step.dot(&gv);
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-10 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let fc = objective(&cand, x, y, c);
            if fc <= f + 1e-4 * t * slope {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (theta, it + 1);
        }
    }
    (theta, MAX_ITER)
}

impl Logistic {
    /// `c` is the inverse regularization strength.
    pub fn fit(x: &Matrix, y: &[u8], c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid("logistic C must be positive"));
        }
        if x.cols > x.rows {
            // the optimum lies in the row space of X; solve there and map back
            let svd = x.to_dmatrix().svd(false, true);
            let vt = svd.v_t.expect("requested V^T");
            let smax = svd.singular_values.max();
            let keep: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&i| svd.singular_values[i] > 1e-12 * smax)
                .collect();
            let basis = Matrix::new(
                keep.len(),
                x.cols,
                keep.iter().flat_map(|&i| (0..x.cols).map(move |j| (i, j))).map(|(i, j)| vt[(i, j)]).collect(),
            );
            let z = project(x, &basis);
            let (theta, iterations) = newton(&z, y, c);
            let r = basis.rows;
            let mut w = vec![0.0; x.cols];
            for k in 0..r {
                for (wj, v) in w.iter_mut().zip(basis.row(k)) {
                    *wj += theta[k] * v;
                }
            }
            return Ok(Self { weights: w, intercept: theta[r], iterations });
        }
        let (theta, iterations) = newton(x, y, c);
        Ok(Self { weights: theta[..x.cols].to_vec(), intercept: theta[x.cols], iterations })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows).map(|i| sigmoid(self.decision(x.row(i)))).collect()
    }
}

/// Rows of `x` expressed in the orthonormal row basis `basis`.
fn project(x: &Matrix, basis: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows, basis.rows);
    for i in 0..x.rows {
        for k in 0..basis.rows {
            out.set(i, k, x.row(i).iter().zip(basis.row(k)).map(|(a, b)| a * b).sum());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn data(seed: u64, n: usize, d: usize, sep: f64) -> (Matrix, Vec<u8>) {
        let mut r = crate::rng::from_seed(seed);
        let mut v = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let l = (i % 2) as u8;
            for j in 0..d {
                let shift = if j == 0 { sep * (f64::from(l) - 0.5) } else { 0.0 };
                v.push(r.gen_range(-1.0..1.0) + shift);
            }
            y.push(l);
        }
        (Matrix::new(n, d, v), y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = data(1, 30, 4, 1.0);
        let mut r = crate::rng::from_seed(9);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
            let c = 10f64.powf(r.gen_range(-3.0..3.0));
            let g = gradient(&theta, &x, &y, c);
            for k in 0..5 {
                let h = 1e-5 * (1.0 + theta[k].abs());
                let mut a = theta.clone();
                let mut b = theta.clone();
                a[k] += h;
                b[k] -= h;
                let fd = (objective(&a, &x, &y, c) - objective(&b, &x, &y, c)) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "k={k} fd={fd} g={}", g[k]);
            }
        }
    }

    #[test]
    fn separable_blobs_are_fit_perfectly() {
        let (x, y) = data(2, 100, 2, 6.0);
        let m = Logistic::fit(&x, &y, 100.0).unwrap();
        let p = m.predict_proba(&x);
        assert!(p.iter().zip(&y).all(|(p, &l)| (*p >= 0.5) == (l == 1)));
    }

    #[test]
    fn wide_data_matches_the_gradient_condition() {
        let (x, y) = data(3, 12, 40, 1.0);
        let m = Logistic::fit(&x, &y, 0.5).unwrap();
        let mut theta = m.weights.clone();
        theta.push(m.intercept);
        let g = gradient(&theta, &x, &y, 0.5);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }
}
