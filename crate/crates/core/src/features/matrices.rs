//! Run-length, size-zone, dependence and neighbourhood gray-tone
//! difference matrices. All are built per slice and summed over slices
//! (and, for run lengths, over the four directions) before features are
//! computed. Gray levels enter the formulas 1-based.

use crate::error::Result;
use crate::features::roi::{LevelSlice, QuantizedRoi, DIRECTIONS, NEIGHBORS8};
use crate::features::stats::GRAY_LEVELS;
use crate::model::Paired;
use crate::scalar::Real;

/// Sparse `(level, length) -> count` matrix with 1-based lengths.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelLengthMatrix {
    pub n_levels: usize,
    /// `counts[level][length - 1]`
    pub counts: Vec<Vec<u64>>,
}

impl LevelLengthMatrix {
    fn new(n_levels: usize) -> Self {
        Self {
            n_levels,
            counts: vec![Vec::new(); n_levels],
        }
    }

    pub fn add(&mut self, level: usize, length: usize) {
        let row = &mut self.counts[level];
        if row.len() < length {
            row.resize(length, 0);
        }
        row[length - 1] += 1;
    }

    pub fn merge(&mut self, other: &LevelLengthMatrix) {
        for (l, row) in other.counts.iter().enumerate() {
            for (k, &c) in row.iter().enumerate() {
                if c > 0 {
                    let r = &mut self.counts[l];
                    if r.len() <= k {
                        r.resize(k + 1, 0);
                    }
                    r[k] += c;
                }
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Non-zero entries as `(level, length, count)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts.iter().enumerate().flat_map(|(l, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(k, &c)| (l, k + 1, c))
        })
    }
}

/// Runs of equal level along `dir`, broken at the mask border.
pub fn run_lengths(slice: &LevelSlice, dir: (isize, isize), n_levels: usize) -> LevelLengthMatrix {
    let mut m = LevelLengthMatrix::new(n_levels);
    let (dx, dy) = dir;
    for y in 0..slice.height as isize {
        for x in 0..slice.width as isize {
            let Some(l) = slice.at(x, y) else { continue };
            if slice.at(x - dx, y - dy) == Some(l) {
                continue;
            }
            let mut len = 1;
            while slice.at(x + dx * len as isize, y + dy * len as isize) == Some(l) {
                len += 1;
            }
            m.add(l as usize, len);
        }
    }
    m
}

/// 8-connected zones of equal level.
pub fn size_zones(slice: &LevelSlice, n_levels: usize) -> LevelLengthMatrix {
    let mut m = LevelLengthMatrix::new(n_levels);
    let mut seen = vec![false; slice.levels.len()];
    let mut stack = Vec::new();
    for start in 0..slice.levels.len() {
        let Some(l) = slice.levels[start] else { continue };
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i % slice.width) as isize, (i / slice.width) as isize);
            for (dx, dy) in NEIGHBORS8 {
                let (nx, ny) = (x + dx, y + dy);
                if slice.at(nx, ny) == Some(l) {
                    let j = ny as usize * slice.width + nx as usize;
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        m.add(l as usize, size);
    }
    m
}

/// Dependence counts: 1 + number of 8-neighbours with an identical level.
pub fn dependence(slice: &LevelSlice, n_levels: usize) -> LevelLengthMatrix {
    let mut m = LevelLengthMatrix::new(n_levels);
    for y in 0..slice.height as isize {
        for x in 0..slice.width as isize {
            let Some(l) = slice.at(x, y) else { continue };
            let k = NEIGHBORS8
                .iter()
                .filter(|&&(dx, dy)| slice.at(x + dx, y + dy) == Some(l))
                .count();
            m.add(l as usize, k + 1);
        }
    }
    m
}

/// Per-level `(n_i, s_i)` of the neighbourhood gray-tone difference matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ngtdm {
    pub n: Vec<u64>,
    pub s: Vec<f64>,
}

pub fn ngtdm_matrix(slice: &LevelSlice, n_levels: usize) -> Ngtdm {
    let mut m = Ngtdm {
        n: vec![0; n_levels],
        s: vec![0.0; n_levels],
    };
    for y in 0..slice.height as isize {
        for x in 0..slice.width as isize {
            let Some(l) = slice.at(x, y) else { continue };
            let (mut sum, mut cnt) = (0.0, 0usize);
            for (dx, dy) in NEIGHBORS8 {
                if let Some(o) = slice.at(x + dx, y + dy) {
                    sum += o as f64 + 1.0;
                    cnt += 1;
                }
            }
            if cnt == 0 {
                continue;
            }
            let i = l as usize;
            m.n[i] += 1;
            m.s[i] += ((i + 1) as f64 - sum / cnt as f64).abs();
        }
    }
    m
}

struct Probs<T> {
    /// `(i, j, p)` with 1-based level `i` and length `j`.
    entries: Vec<(T, T, T)>,
    /// marginal over levels, indexed by 0-based level
    by_level: Vec<T>,
    /// marginal over lengths, indexed by length - 1
    by_length: Vec<T>,
    total: T,
}

fn probs<T: Real>(m: &LevelLengthMatrix) -> Option<Probs<T>> {
    let total = m.total();
    if total == 0 {
        return None;
    }
    let tot = T::of(total as f64);
    let max_len = m.counts.iter().map(Vec::len).max().unwrap_or(0);
    let mut by_level = vec![T::zero(); m.n_levels];
    let mut by_length = vec![T::zero(); max_len];
    let mut entries = Vec::new();
    for (l, len, c) in m.entries() {
        let c = T::of(c as f64);
        by_level[l] += c;
        by_length[len - 1] += c;
        entries.push((T::of_usize(l + 1), T::of_usize(len), c / tot));
    }
    Some(Probs {
        entries,
        by_level,
        by_length,
        total: tot,
    })
}

/// Features shared by the run-length, size-zone and dependence matrices.
struct Common<T> {
    short: T,
    long: T,
    gln: T,
    ln: T,
    glv: T,
    lv: T,
    entropy: T,
    low_gl: T,
    high_gl: T,
    short_low: T,
    short_high: T,
    long_low: T,
    long_high: T,
    total: T,
}

fn common<T: Real>(m: &LevelLengthMatrix) -> Option<Common<T>> {
    let p = probs::<T>(m)?;
    let mut c = Common {
        short: T::zero(),
        long: T::zero(),
        gln: T::zero(),
        ln: T::zero(),
        glv: T::zero(),
        lv: T::zero(),
        entropy: T::zero(),
        low_gl: T::zero(),
        high_gl: T::zero(),
        short_low: T::zero(),
        short_high: T::zero(),
        long_low: T::zero(),
        long_high: T::zero(),
        total: p.total,
    };
    let (mut mu_i, mut mu_j) = (T::zero(), T::zero());
    for &(i, j, q) in &p.entries {
        let (i2, j2) = (i * i, j * j);
        c.short += q / j2;
        c.long += q * j2;
        c.low_gl += q / i2;
        c.high_gl += q * i2;
        c.short_low += q / (i2 * j2);
        c.short_high += q * i2 / j2;
        c.long_low += q * j2 / i2;
        c.long_high += q * i2 * j2;
        c.entropy -= q * q.log2();
        mu_i += q * i;
        mu_j += q * j;
    }
    for &(i, j, q) in &p.entries {
        c.glv += q * (i - mu_i) * (i - mu_i);
        c.lv += q * (j - mu_j) * (j - mu_j);
    }
    c.gln = p.by_level.iter().map(|&v| v * v).sum::<T>() / p.total;
    c.ln = p.by_length.iter().map(|&v| v * v).sum::<T>() / p.total;
    c.entropy = c.entropy.abs();
    Some(c)
}

fn missing<T: Real>(n: usize) -> Vec<T> {
    vec![T::nan(); n]
}

/// 16 run-length features; `n_pixels` is the ROI pixel count.
pub fn glrlm_from_matrix<T: Real>(m: &LevelLengthMatrix, n_pixels: usize, n_dirs: usize) -> Vec<T> {
    let Some(c) = common::<T>(m) else {
        return missing(16);
    };
    vec![
        c.gln,
        c.gln / c.total,
        c.glv,
        c.high_gl,
        c.long,
        c.long_high,
        c.long_low,
        c.low_gl,
        c.entropy,
        c.ln,
        c.ln / c.total,
        c.total / T::of_usize(n_pixels * n_dirs),
        c.lv,
        c.short,
        c.short_high,
        c.short_low,
    ]
}

pub fn glszm_from_matrix<T: Real>(m: &LevelLengthMatrix, n_pixels: usize) -> Vec<T> {
    let Some(c) = common::<T>(m) else {
        return missing(16);
    };
    vec![
        c.gln,
        c.gln / c.total,
        c.glv,
        c.high_gl,
        c.long,
        c.long_high,
        c.long_low,
        c.low_gl,
        c.ln,
        c.ln / c.total,
        c.short,
        c.short_high,
        c.short_low,
        c.entropy,
        c.total / T::of_usize(n_pixels),
        c.lv,
    ]
}

pub fn gldm_from_matrix<T: Real>(m: &LevelLengthMatrix) -> Vec<T> {
    let Some(c) = common::<T>(m) else {
        return missing(14);
    };
    vec![
        c.entropy,
        c.ln,
        c.ln / c.total,
        c.lv,
        c.gln,
        c.glv,
        c.high_gl,
        c.long,
        c.long_high,
        c.long_low,
        c.low_gl,
        c.short,
        c.short_high,
        c.short_low,
    ]
}

/// `[busyness, coarseness, complexity, contrast, strength]`.
pub fn ngtdm_from_matrix<T: Real>(m: &Ngtdm) -> Vec<T> {
    let nvp: u64 = m.n.iter().sum();
    if nvp == 0 {
        return missing(5);
    }
    let nvp_t = T::of(nvp as f64);
    let present: Vec<(T, T, T)> = m
        .n
        .iter()
        .zip(&m.s)
        .enumerate()
        .filter(|(_, (&n, _))| n > 0)
        .map(|(i, (&n, &s))| (T::of_usize(i + 1), T::of(n as f64) / nvp_t, T::of(s)))
        .collect();
    let ngp = present.len();
    let sum_ps: T = present.iter().map(|&(_, p, s)| p * s).sum();
    let sum_s: T = present.iter().map(|&(_, _, s)| s).sum();

    let coarseness = if sum_ps > T::zero() {
        T::one() / sum_ps
    } else {
        T::nan()
    };
    let (mut diff_sq, mut busy_den, mut complexity, mut strength_num) =
        (T::zero(), T::zero(), T::zero(), T::zero());
    for &(i, pi, si) in &present {
        for &(j, pj, sj) in &present {
            let d = i - j;
            diff_sq += pi * pj * d * d;
            busy_den += (i * pi - j * pj).abs();
            complexity += d.abs() * (pi * si + pj * sj) / (pi + pj);
            strength_num += (pi + pj) * d * d;
        }
    }
    let contrast = if ngp > 1 {
        diff_sq / T::of_usize(ngp * (ngp - 1)) * sum_s / nvp_t
    } else {
        T::zero()
    };
    let busyness = if ngp > 1 && busy_den > T::zero() {
        sum_ps / busy_den
    } else {
        T::zero()
    };
    let complexity = complexity / nvp_t;
    let strength = if sum_s > T::zero() {
        strength_num / sum_s
    } else {
        T::zero()
    };
    vec![busyness, coarseness, complexity, contrast, strength]
}

/// GLSZM (16), GLRLM (16), GLDM (14) and NGTDM (5) features, concatenated.
pub fn matrix_family_from_roi<T: Real>(roi: &QuantizedRoi) -> Vec<T> {
    let n = roi.n_levels;
    let n_pixels = roi.pixel_count();
    let mut rl = LevelLengthMatrix::new(n);
    let mut sz = LevelLengthMatrix::new(n);
    let mut dep = LevelLengthMatrix::new(n);
    let mut ng = Ngtdm {
        n: vec![0; n],
        s: vec![0.0; n],
    };
    for s in &roi.slices {
        for dir in DIRECTIONS {
            rl.merge(&run_lengths(s, dir, n));
        }
        sz.merge(&size_zones(s, n));
        dep.merge(&dependence(s, n));
        let m = ngtdm_matrix(s, n);
        for i in 0..n {
            ng.n[i] += m.n[i];
            ng.s[i] += m.s[i];
        }
    }
    let mut out: Vec<T> = glszm_from_matrix(&sz, n_pixels);
    out.extend(glrlm_from_matrix::<T>(&rl, n_pixels, DIRECTIONS.len()));
    out.extend(gldm_from_matrix::<T>(&dep));
    out.extend(ngtdm_from_matrix::<T>(&ng));
    out
}

pub fn matrix_family_features<T: Real>(p: Paired<'_, T>) -> Result<Vec<T>> {
    Ok(matrix_family_from_roi(&QuantizedRoi::new(p, GRAY_LEVELS)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(w: usize, h: usize) -> LevelSlice {
        LevelSlice::new(w, h, vec![Some(3); w * h])
    }

    #[test]
    fn constant_patch_runs_by_hand() {
        let s = constant(4, 4);
        let mut m = LevelLengthMatrix::new(16);
        for d in DIRECTIONS {
            m.merge(&run_lengths(&s, d, 16));
        }
        // 0° and 90°: 4 runs of 4 each; diagonals: lengths 1,2,3,4,3,2,1.
        let runs: Vec<usize> = [4, 4, 4, 4, 4, 4, 4, 4]
            .into_iter()
            .chain([1, 2, 3, 4, 3, 2, 1, 1, 2, 3, 4, 3, 2, 1])
            .collect();
        let lre_hand =
            runs.iter().map(|&r| (r * r) as f64).sum::<f64>() / runs.len() as f64;
        let f = glrlm_from_matrix::<f64>(&m, 16, 4);
        assert!((f[4] - lre_hand).abs() < 1e-12);
        assert_eq!(f[11], runs.len() as f64 / 64.0);
    }

    #[test]
    fn constant_patch_single_zone() {
        let m = size_zones(&constant(4, 4), 16);
        assert_eq!(m.entries().collect::<Vec<_>>(), vec![(3, 16, 1)]);
        let f = glszm_from_matrix::<f64>(&m, 16);
        assert_eq!(f[14], 1.0 / 16.0);
        let ng = ngtdm_from_matrix::<f64>(&ngtdm_matrix(&constant(4, 4), 16));
        assert_eq!(ng[3], 0.0);
        assert!(ng[1].is_nan());
    }

    #[test]
    fn single_pixel_dependence() {
        let s = LevelSlice::new(3, 3, {
            let mut v = vec![None; 9];
            v[4] = Some(7);
            v
        });
        let m = dependence(&s, 16);
        assert_eq!(m.entries().collect::<Vec<_>>(), vec![(7, 1, 1)]);
        assert!(gldm_from_matrix::<f64>(&m).iter().all(|v| v.is_finite()));
        // no neighbours: NGTDM has no valid pixels
        assert!(ngtdm_from_matrix::<f64>(&ngtdm_matrix(&s, 16))
            .iter()
            .all(|v| v.is_nan()));
    }

    #[test]
    fn zones_are_eight_connected() {
        let s = LevelSlice::new(
            2,
            2,
            vec![Some(1), Some(0), Some(0), Some(1)],
        );
        let m = size_zones(&s, 2);
        assert_eq!(m.entries().collect::<Vec<_>>(), vec![(0, 2, 1), (1, 2, 1)]);
    }
}
