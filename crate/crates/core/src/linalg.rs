//! Small dense helpers generic over [`Real`].

use crate::scalar::Real;

/// Eigen-decomposition of a symmetric `N×N` matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors as columns (`vecs[row][col]`).
pub fn sym_eigen<T: Real, const N: usize>(m: [[T; N]; N]) -> ([T; N], [[T; N]; N]) {
    let mut a = m;
    let mut v = [[T::zero(); N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[p][q] * a[p][q];
            }
        }
        let scale: T = (0..N).map(|i| a[i][i] * a[i][i]).sum::<T>() + off;
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::of(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: [usize; N] = [0; N];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vals = [T::zero(); N];
    let mut vecs = [[T::zero(); N]; N];
    for (c, &i) in order.iter().enumerate() {
        vals[c] = a[i][i];
        for r in 0..N {
            vecs[r][c] = v[r][i];
        }
    }
    (vals, vecs)
}

/// Population covariance of points.
pub fn covariance<T: Real, const N: usize>(points: &[[T; N]]) -> ([T; N], [[T; N]; N]) {
    let n = T::of_usize(points.len().max(1));
    let mut mean = [T::zero(); N];
    for p in points {
        for k in 0..N {
            mean[k] += p[k];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut cov = [[T::zero(); N]; N];
    for p in points {
        for i in 0..N {
            for j in 0..N {
                cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= n;
        }
    }
    (mean, cov)
}
