//! Soft-margin SVM trained by SMO with second-order working-set selection,
//! calibrated with a sigmoid fitted to the training decision values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::matrix::sq_dist;
use crate::pipeline::Matrix;

pub const SMO_TOL: f64 = 1e-3;
pub const SMO_MAX_ITER: usize = 1_000_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => (-gamma * sq_dist(a, b)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    pub support: Matrix,
    /// `alpha_i * y_i` for each support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

struct Dual {
    alpha: Vec<f64>,
    rho: f64,
}

fn smo(k: &[Vec<f64>], y: &[f64], c: f64) -> Dual {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    for _ in 0..SMO_MAX_ITER {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if y[t] > 0.0 {
                if !upper(alpha[t]) && -g[t] >= gmax {
                    gmax = -g[t];
                    i = t;
                }
            } else if !lower(alpha[t]) && g[t] >= gmax {
                gmax = g[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if y[t] > 0.0 {
                if !lower(alpha[t]) {
                    let diff = gmax + g[t];
                    if g[t] >= gmax2 {
                        gmax2 = g[t];
                    }
                    if diff > 0.0 {
                        let quad = k[i][i] + k[t][t] - 2.0 * y[i] * y[i] * y[t] * k[i][t];
                        let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best {
                            best = obj;
                            j = t;
                        }
                    }
                }
            } else if !upper(alpha[t]) {
                let diff = gmax - g[t];
                if -g[t] >= gmax2 {
                    gmax2 = -g[t];
                }
                if diff > 0.0 {
                    let quad = k[i][i] + k[t][t] + 2.0 * y[i] * y[i] * y[t] * k[i][t];
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if gmax + gmax2 < SMO_TOL || j == usize::MAX {
            break;
        }
        let qij = y[i] * y[j] * k[i][j];
        let (oi, oj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[i][i] + k[j][j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[i][i] + k[j][j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - oi, alpha[j] - oj);
        for t in 0..n {
            g[t] += y[i] * y[t] * k[i][t] * di + y[j] * y[t] * k[j][t] * dj;
        }
    }
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * g[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    Dual { alpha, rho }
}

/// Sigmoid `1 / (1 + exp(a f + b))` fitted by regularized Newton on smoothed targets.
pub fn platt(dec: &[f64], y: &[u8]) -> (f64, f64) {
    let pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let neg = y.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let t: Vec<f64> = y.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let value = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = a * f + b;
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let (mut a, mut b) = (0.0, ((neg + 1.0) / (pos + 1.0)).ln());
    let mut fval = value(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = a * f + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = value(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}

impl Svm {
    pub fn fit(x: &Matrix, y: &[u8], c: f64, kernel: Kernel) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid("SVM C must be positive"));
        }
        let n = x.rows;
        let ys: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| kernel.eval(x.row(i), x.row(j))).collect()).collect();
        let dual = smo(&k, &ys, c);
        let sv: Vec<usize> = (0..n).filter(|&i| dual.alpha[i] > 0.0).collect();
        let coef: Vec<f64> = sv.iter().map(|&i| dual.alpha[i] * ys[i]).collect();
        let dec: Vec<f64> = (0..n)
            .map(|i| sv.iter().zip(&coef).map(|(&s, &a)| a * k[s][i]).sum::<f64>() - dual.rho)
            .collect();
        let (platt_a, platt_b) = platt(&dec, y);
        Ok(Self { kernel, support: x.select_rows(&sv), coef, rho: dual.rho, platt_a, platt_b })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        (0..self.support.rows)
            .map(|s| self.coef[s] * self.kernel.eval(self.support.row(s), row))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows)
            .map(|i| {
                let z = self.platt_a * self.decision(x.row(i)) + self.platt_b;
                crate::pipeline::logistic::sigmoid(-z)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.3;
            rows.push(vec![-2.0 + t.sin() * 0.5, t.cos() * 0.5]);
            y.push(0);
            rows.push(vec![2.0 + t.cos() * 0.5, t.sin() * 0.5]);
            y.push(1);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn linear_margin_on_separable_blobs() {
        let (x, y) = blobs();
        let m = Svm::fit(&x, &y, 10.0, Kernel::Linear).unwrap();
        for i in 0..x.rows {
            assert_eq!(m.decision(x.row(i)) > 0.0, y[i] == 1);
        }
        let p = m.predict_proba(&x);
        assert!(p.iter().zip(&y).all(|(p, &l)| (*p > 0.5) == (l == 1)));
    }

    #[test]
    fn kkt_conditions_hold() {
        let (x, y) = blobs();
        let m = Svm::fit(&x, &y, 1.0, Kernel::Rbf { gamma: 0.5 }).unwrap();
        let sum: f64 = m.coef.iter().sum();
        assert!(sum.abs() < 1e-9);
        assert!(m.coef.iter().all(|a| a.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn platt_slope_is_negative_for_informative_scores() {
        let dec = [-2.0, -1.5, -0.2, 0.1, 1.0, 2.2, 0.4, -0.6];
        let y = [0, 0, 0, 1, 1, 1, 1, 0];
        let (a, _) = platt(&dec, &y);
        assert!(a < 0.0);
    }
}
