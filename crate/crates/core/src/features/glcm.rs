//! Gray-level co-occurrence matrices and the six Haralick-style features.

use crate::error::{Error, Result};
use crate::features::roi::{LevelSlice, QuantizedRoi};
use crate::features::stats::GRAY_LEVELS;
use crate::model::{names, Paired};
use crate::scalar::Real;

/// Symmetric co-occurrence counts (`n × n`, row-major) for pixel pairs
/// `p` and `p + (dx, dy)` with both endpoints inside the mask.
pub fn cooccurrence_counts(slice: &LevelSlice, dx: isize, dy: isize, n: usize) -> Vec<u64> {
    let mut m = vec![0u64; n * n];
    for y in 0..slice.height as isize {
        for x in 0..slice.width as isize {
            let (Some(a), Some(b)) = (slice.at(x, y), slice.at(x + dx, y + dy)) else {
                continue;
            };
            let (a, b) = (a as usize, b as usize);
            m[a * n + b] += 1;
            m[b * n + a] += 1;
        }
    }
    m
}

/// `[contrast, dissimilarity, homogeneity, ASM, energy, correlation]` of a
/// count matrix. Returns `None` when the matrix is empty. Correlation is
/// missing (`NaN`) when a marginal has zero variance.
pub fn haralick<T: Real>(counts: &[u64], n: usize) -> Option<[T; 6]> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let total = T::of(total as f64);
    let (mut contrast, mut dissim, mut homog, mut asm) = (T::zero(), T::zero(), T::zero(), T::zero());
    let (mut mu_i, mut mu_j) = (T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            let c = counts[i * n + j];
            if c == 0 {
                continue;
            }
            let p = T::of(c as f64) / total;
            let d = T::of(i as f64 - j as f64);
            contrast += p * d * d;
            dissim += p * d.abs();
            homog += p / (T::one() + d * d);
            asm += p * p;
            mu_i += p * T::of_usize(i);
            mu_j += p * T::of_usize(j);
        }
    }
    let (mut var_i, mut var_j, mut cov) = (T::zero(), T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            let c = counts[i * n + j];
            if c == 0 {
                continue;
            }
            let p = T::of(c as f64) / total;
            let di = T::of_usize(i) - mu_i;
            let dj = T::of_usize(j) - mu_j;
            var_i += p * di * di;
            var_j += p * dj * dj;
            cov += p * di * dj;
        }
    }
    let tiny = T::of(1e-15);
    let correlation = if var_i <= tiny || var_j <= tiny {
        T::nan()
    } else {
        cov / (var_i * var_j).sqrt()
    };
    Some([contrast, dissim, homog, asm, asm.sqrt(), correlation])
}

/// Offset of `d` pixels along `deg`, each axis rounded to the nearest pixel.
pub fn pixel_offset(deg: u32, d: usize) -> (isize, isize) {
    let t = (deg as f64).to_radians();
    let r = d as f64;
    ((r * t.cos()).round() as isize, (r * t.sin()).round() as isize)
}

fn mean_std<T: Real>(v: &[T]) -> (T, T) {
    let f: Vec<T> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if f.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::of_usize(f.len());
    let m = f.iter().copied().sum::<T>() / n;
    let var = f.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / n;
    (m, var.sqrt())
}

/// GLCM features of a quantized ROI in dictionary order (144 values).
pub fn glcm_from_roi<T: Real>(roi: &QuantizedRoi) -> Result<Vec<T>> {
    let n = roi.n_levels;
    // [feature][distance][angle][variant]
    let mut table = vec![[[[T::nan(); 3]; 4]; 2]; 6];
    let mut any_pair = false;
    for (di, &d) in names::GLCM_DISTANCES.iter().enumerate() {
        for (ai, &deg) in names::GLCM_ANGLES.iter().enumerate() {
            let (dx, dy) = pixel_offset(deg, d);
            let mut summed = vec![0u64; n * n];
            let mut per_slice: Vec<[T; 6]> = Vec::new();
            for s in &roi.slices {
                let c = cooccurrence_counts(s, dx, dy, n);
                for (acc, v) in summed.iter_mut().zip(&c) {
                    *acc += v;
                }
                if let Some(f) = haralick::<T>(&c, n) {
                    per_slice.push(f);
                }
            }
            if let Some(f) = haralick::<T>(&summed, n) {
                any_pair = true;
                for k in 0..6 {
                    let col: Vec<T> = per_slice.iter().map(|v| v[k]).collect();
                    let (m, sd) = mean_std(&col);
                    table[k][di][ai] = [f[k], m, sd];
                }
            }
        }
    }
    if !any_pair {
        return Err(Error::invalid("no in-mask pixel pair for any GLCM offset"));
    }
    let mut out = Vec::with_capacity(144);
    for f in &table {
        for d in f {
            for a in d {
                out.extend_from_slice(a);
            }
        }
    }
    Ok(out)
}

pub fn glcm_features<T: Real>(p: Paired<'_, T>) -> Result<Vec<T>> {
    glcm_from_roi(&QuantizedRoi::new(p, GRAY_LEVELS)?)
}
