//! First-order statistics and gray-level quantization.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Bins of the histogram behind `peak`, `peak_position` and `entropy`.
pub const HISTOGRAM_BINS: usize = 50;

/// Gray levels used by every texture matrix.
pub const GRAY_LEVELS: usize = 16;

/// The 13 first-order statistics, in dictionary order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatVector13<T> {
    pub min: T,
    pub max: T,
    pub mean: T,
    pub median: T,
    pub std: T,
    pub skewness: T,
    pub kurtosis: T,
    pub peak: T,
    pub peak_position: T,
    pub range: T,
    pub energy: T,
    pub quartile_range: T,
    pub entropy: T,
}

impl<T: Real> StatVector13<T> {
    pub fn to_array(&self) -> [T; 13] {
        [
            self.min,
            self.max,
            self.mean,
            self.median,
            self.std,
            self.skewness,
            self.kurtosis,
            self.peak,
            self.peak_position,
            self.range,
            self.energy,
            self.quartile_range,
            self.entropy,
        ]
    }

    /// All-missing vector, used when a pixel set is empty.
    pub fn missing() -> Self {
        let n = T::nan();
        Self {
            min: n,
            max: n,
            mean: n,
            median: n,
            std: n,
            skewness: n,
            kurtosis: n,
            peak: n,
            peak_position: n,
            range: n,
            energy: n,
            quartile_range: n,
            entropy: n,
        }
    }
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Computes the 13 statistics. Skewness and kurtosis (excess) are 0 for
/// constant input; std is the population standard deviation.
pub fn stats13<T: Real>(values: &[T]) -> StatVector13<T> {
    if values.is_empty() {
        return StatVector13::missing();
    }
    let n = T::of_usize(values.len());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let range = max - min;
    let mean = values.iter().copied().sum::<T>() / n;
    let energy = values.iter().map(|&v| v * v).sum::<T>();
    let median = percentile_sorted(&sorted, 0.5);
    let quartile_range = percentile_sorted(&sorted, 0.75) - percentile_sorted(&sorted, 0.25);

    let (std, skewness, kurtosis) = if range == T::zero() {
        (T::zero(), T::zero(), T::zero())
    } else {
        let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        if m2 == T::zero() {
            (T::zero(), T::zero(), T::zero())
        } else {
            (
                m2.sqrt(),
                m3 / m2.powf(T::of(1.5)),
                m4 / (m2 * m2) - T::of(3.0),
            )
        }
    };

    let hist = histogram(&sorted, min, max, HISTOGRAM_BINS);
    let (mode_bin, mode_count) = hist
        .iter()
        .enumerate()
        .fold((0, 0), |best, (i, &c)| if c > best.1 { (i, c) } else { best });
    let width = range / T::of_usize(HISTOGRAM_BINS);
    let peak_position = min + width * (T::of_usize(mode_bin) + T::of(0.5));
    let mut entropy = T::zero();
    for &c in &hist {
        if c > 0 {
            let p = T::of_usize(c) / n;
            entropy -= p * p.log2();
        }
    }
    // -0.0 for a single occupied bin
    entropy = entropy.abs();

    StatVector13 {
        min,
        max,
        mean,
        median,
        std,
        skewness,
        kurtosis,
        peak: T::of_usize(mode_count),
        peak_position,
        range,
        energy,
        quartile_range,
        entropy,
    }
}

/// Equal-width histogram over `[min, max]`; the maximum lands in the last bin.
pub fn histogram<T: Real>(values: &[T], min: T, max: T, bins: usize) -> Vec<usize> {
    let mut out = vec![0usize; bins];
    let range = max - min;
    for &v in values {
        let b = if range > T::zero() {
            let k = ((v - min) / range * T::of_usize(bins)).floor();
            k.to_usize().unwrap_or(0).min(bins - 1)
        } else {
            0
        };
        out[b] += 1;
    }
    out
}

/// Equal-width quantization into `[0, n_levels)` between the minimum and
/// maximum of `values`. A constant input maps to level 0.
pub fn quantize<T: Real>(values: &[T], n_levels: usize) -> Vec<usize> {
    if values.is_empty() {
        return Vec::new();
    }
    let (min, max) = values
        .iter()
        .fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    quantize_with(values, min, max, n_levels)
}

pub fn quantize_with<T: Real>(values: &[T], min: T, max: T, n_levels: usize) -> Vec<usize> {
    let range = max - min;
    if range <= T::zero() {
        return vec![0; values.len()];
    }
    let width = range / T::of_usize(n_levels);
    values
        .iter()
        .map(|&v| {
            let k = ((v - min) / width).floor();
            k.to_usize().unwrap_or(0).min(n_levels - 1)
        })
        .collect()
}
