//! Slice-wise filter bank: LBP, Gabor, Laplacian of Gaussian and Frangi
//! vesselness. Filters run on the full axial slice with mirror padding;
//! statistics are taken over in-mask pixels pooled across slices.

use rustfft::num_complex::Complex;

use crate::features::phase::phase_images;
use crate::features::stats::{stats13, StatVector13};
use crate::model::{names, Paired};
use crate::scalar::Real;

/// A 2-D scalar image, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Value with symmetric (half-sample) mirroring outside the plane.
    #[inline]
    pub fn mirrored(&self, x: isize, y: isize) -> T {
        self.get(reflect(x, self.width), reflect(y, self.height))
    }
}

/// Symmetric reflection `… c b a | a b c … | c b a …` for any offset.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable correlation with mirror padding: `kx` along x, then `ky` along y.
pub fn separable<T: Real>(p: &Plane<T>, kx: &[T], ky: &[T]) -> Plane<T> {
    let (w, h) = (p.width, p.height);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &c) in kx.iter().enumerate() {
                acc += c * p.get(reflect(x as isize + k as isize - rx, w), y);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &c) in ky.iter().enumerate() {
                acc += c * tmp[reflect(y as isize + k as isize - ry, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    Plane::new(w, h, out)
}

fn separable_complex<T: Real>(p: &Plane<T>, kx: &[Complex<T>], ky: &[Complex<T>]) -> Vec<Complex<T>> {
    let (w, h) = (p.width, p.height);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![Complex::new(T::zero(), T::zero()); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &c) in kx.iter().enumerate() {
                acc += c * p.get(reflect(x as isize + k as isize - rx, w), y);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![Complex::new(T::zero(), T::zero()); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &c) in ky.iter().enumerate() {
                acc += c * tmp[reflect(y as isize + k as isize - ry, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// The plane minus its first pixel. Every filter below is blind to a
/// constant offset, and removing it first makes flat input exactly zero.
pub(crate) fn centered<T: Real>(p: &Plane<T>) -> Plane<T> {
    let c = p.data.first().copied().unwrap_or_else(T::zero);
    Plane::new(p.width, p.height, p.data.iter().map(|&v| v - c).collect())
}

/// Sampled Gaussian and its first and second derivatives on `[-r, r]`.
///
/// The Gaussian sums to one; the derivatives sum to zero, so constant
/// input gives exactly zero derivative response.
pub fn gaussian_kernels<T: Real>(sigma: f64, radius: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let r = radius as isize;
    let s2 = sigma * sigma;
    let g: Vec<f64> = (-r..=r).map(|x| (-(x * x) as f64 / (2.0 * s2)).exp()).collect();
    let total: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / total).collect();
    let d1: Vec<f64> = (-r..=r)
        .zip(&g)
        .map(|(x, &v)| -(x as f64) / s2 * v)
        .collect();
    let d2: Vec<f64> = (-r..=r)
        .zip(&g)
        .map(|(x, &v)| ((x * x) as f64 - s2) / (s2 * s2) * v)
        .collect();
    let d2_sum: f64 = d2.iter().sum();
    let d2: Vec<f64> = d2.iter().zip(&g).map(|(a, b)| a - d2_sum * b).collect();
    let cv = |v: Vec<f64>| v.into_iter().map(T::of).collect::<Vec<T>>();
    (cv(g), cv(d1), cv(d2))
}

/// Scale-normalized Laplacian of Gaussian, `σ²(Ixx + Iyy)`.
pub fn log_filter<T: Real>(p: &Plane<T>, sigma: f64) -> Plane<T> {
    let p = &centered(p);
    let (g, _, d2) = gaussian_kernels::<T>(sigma, (4.0 * sigma).ceil() as usize);
    let a = separable(p, &d2, &g);
    let b = separable(p, &g, &d2);
    let s2 = T::of(sigma * sigma);
    Plane::new(
        p.width,
        p.height,
        a.data.iter().zip(&b.data).map(|(&x, &y)| s2 * (x + y)).collect(),
    )
}

/// Gaussian envelope width for a Gabor filter of one octave bandwidth.
pub fn gabor_sigma(frequency: f64) -> f64 {
    let b: f64 = 1.0;
    (1.0 / std::f64::consts::PI) * (2f64.ln() / 2.0).sqrt() * (2f64.powf(b) + 1.0)
        / (2f64.powf(b) - 1.0)
        / frequency
}

/// Magnitude of the zero-mean complex Gabor response.
pub fn gabor_magnitude<T: Real>(p: &Plane<T>, frequency: f64, theta_deg: f64) -> Plane<T> {
    let p = &centered(p);
    let sigma = gabor_sigma(frequency);
    let r = (3.0 * sigma).ceil() as isize;
    let theta = theta_deg.to_radians();
    let (ct, st) = (theta.cos(), theta.sin());
    let env: Vec<f64> = (-r..=r)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let carrier = |x: isize, c: f64| {
        let ph = 2.0 * std::f64::consts::PI * frequency * x as f64 * c;
        Complex::new(ph.cos(), ph.sin())
    };
    let kx: Vec<Complex<f64>> = (-r..=r).zip(&env).map(|(x, &e)| carrier(x, ct) * e).collect();
    let ky: Vec<Complex<f64>> = (-r..=r).zip(&env).map(|(y, &e)| carrier(y, st) * e).collect();
    let env_sum: f64 = env.iter().sum();
    let dc = kx.iter().sum::<Complex<f64>>() * ky.iter().sum::<Complex<f64>>() / (env_sum * env_sum);

    let to_t = |v: &[Complex<f64>]| -> Vec<Complex<T>> {
        v.iter().map(|c| Complex::new(T::of(c.re), T::of(c.im))).collect()
    };
    let resp = separable_complex(p, &to_t(&kx), &to_t(&ky));
    let envt: Vec<T> = env.iter().map(|&e| T::of(e)).collect();
    let smooth = separable(p, &envt, &envt);
    let dct = Complex::new(T::of(dc.re), T::of(dc.im));
    Plane::new(
        p.width,
        p.height,
        resp.iter()
            .zip(&smooth.data)
            .map(|(&c, &s)| (c - dct * s).norm())
            .collect(),
    )
}

pub const FRANGI_SCALES: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 9.0];
pub const FRANGI_BETA: f64 = 0.5;

/// Frangi vesselness for bright tubular structures, maximum over scales.
///
/// The structureness constant is half the largest Hessian norm in the
/// slice at each scale.
pub fn frangi<T: Real>(p: &Plane<T>) -> Plane<T> {
    let p = &centered(p);
    let n = p.data.len();
    let mut best = vec![T::zero(); n];
    let beta2 = T::of(2.0 * FRANGI_BETA * FRANGI_BETA);
    for &sigma in &FRANGI_SCALES {
        let (g, d1, d2) = gaussian_kernels::<T>(sigma, (3.0 * sigma).ceil() as usize);
        let s2 = T::of(sigma * sigma);
        let hxx = separable(p, &d2, &g);
        let hyy = separable(p, &g, &d2);
        let hxy = separable(p, &d1, &d1);
        let mut eig = Vec::with_capacity(n);
        let mut max_norm = T::zero();
        for i in 0..n {
            let (a, b, c) = (s2 * hxx.data[i], s2 * hyy.data[i], s2 * hxy.data[i]);
            let half_tr = (a + b) / T::of(2.0);
            let disc = (((a - b) / T::of(2.0)).powi(2) + c * c).sqrt();
            let (mut l1, mut l2) = (half_tr + disc, half_tr - disc);
            if l1.abs() > l2.abs() {
                std::mem::swap(&mut l1, &mut l2);
            }
            let norm = (l1 * l1 + l2 * l2).sqrt();
            max_norm = max_norm.max(norm);
            eig.push((l1, l2, norm));
        }
        let c = max_norm / T::of(2.0);
        if c <= T::zero() {
            continue;
        }
        let c2 = T::of(2.0) * c * c;
        for (i, &(l1, l2, s)) in eig.iter().enumerate() {
            if l2 >= T::zero() {
                continue;
            }
            let rb = l1 / l2;
            let v = (-(rb * rb) / beta2).exp() * (T::one() - (-(s * s) / c2).exp());
            if v > best[i] {
                best[i] = v;
            }
        }
    }
    Plane::new(p.width, p.height, best)
}

/// Rotation-invariant uniform LBP codes in `0..=P+1`.
pub fn lbp<T: Real>(p: &Plane<T>, radius: usize, points: usize) -> Plane<T> {
    let (w, h) = (p.width, p.height);
    let offsets: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
            let round = |v: f64| (v * 1e5).round() / 1e5;
            (round(radius as f64 * a.cos()), round(-(radius as f64) * a.sin()))
        })
        .collect();
    let mut out = Vec::with_capacity(w * h);
    let mut bits = vec![false; points];
    for y in 0..h {
        for x in 0..w {
            let center = p.get(x, y);
            for (k, &(dx, dy)) in offsets.iter().enumerate() {
                let fx = x as f64 + dx;
                let fy = y as f64 + dy;
                let (x0, y0) = (fx.floor(), fy.floor());
                let (tx, ty) = (T::of(fx - x0), T::of(fy - y0));
                let (x0, y0) = (x0 as isize, y0 as isize);
                let d = |xx: isize, yy: isize| p.mirrored(xx, yy) - center;
                // interpolate differences so flat neighbourhoods give exactly 0
                let v = d(x0, y0) * (T::one() - tx) * (T::one() - ty)
                    + d(x0 + 1, y0) * tx * (T::one() - ty)
                    + d(x0, y0 + 1) * (T::one() - tx) * ty
                    + d(x0 + 1, y0 + 1) * tx * ty;
                bits[k] = v >= T::zero();
            }
            let transitions = (0..points).filter(|&k| bits[k] != bits[(k + 1) % points]).count();
            let code = if transitions <= 2 {
                bits.iter().filter(|&&b| b).count()
            } else {
                points + 1
            };
            out.push(T::of_usize(code));
        }
    }
    Plane::new(w, h, out)
}

/// 2-D erosion with a 3×3 cross; pixels outside the plane count as background.
pub fn erode(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let at = |x: isize, y: isize| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask[y as usize * w + x as usize]
    };
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            at(x, y) && at(x - 1, y) && at(x + 1, y) && at(x, y - 1) && at(x, y + 1)
        })
        .collect()
}

/// Pooled in-mask responses for one filter output per slice.
struct Pool<T> {
    values: Vec<T>,
}

impl<T: Real> Pool<T> {
    fn new() -> Self {
        Self { values: Vec::new() }
    }

    fn add(&mut self, plane: &Plane<T>, mask: &[bool]) {
        self.values
            .extend(plane.data.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v));
    }

    fn stats(&self) -> StatVector13<T> {
        stats13(&self.values)
    }
}

/// LBP (39), Gabor (156), LoG (39), vessel (39) and local-phase (39)
/// features, concatenated in dictionary order.
pub fn filter_bank_features<T: Real>(p: Paired<'_, T>) -> Vec<T> {
    let dims = p.image.dims();
    let (w, h) = (dims[0], dims[1]);
    let mut lbp_pools: Vec<Pool<T>> = names::LBP_PARAMS.iter().map(|_| Pool::new()).collect();
    let mut gabor_pools: Vec<Pool<T>> = (0..names::GABOR_FREQUENCIES.len() * names::GABOR_ANGLES.len())
        .map(|_| Pool::new())
        .collect();
    let mut log_pools: Vec<Pool<T>> = names::LOG_SIGMAS.iter().map(|_| Pool::new()).collect();
    let mut vessel_pools: Vec<Pool<T>> = (0..3).map(|_| Pool::new()).collect();
    let mut inner_fallback = Pool::new();
    let mut phase_pools: Vec<Pool<T>> = (0..3).map(|_| Pool::new()).collect();

    for z in p.mask.occupied_slices() {
        let plane = Plane::new(w, h, p.image.slice(z));
        let m = p.mask.slice(z);
        for (pool, &(r, n)) in lbp_pools.iter_mut().zip(&names::LBP_PARAMS) {
            pool.add(&lbp(&plane, r, n), &m);
        }
        let mut k = 0;
        for &f in &names::GABOR_FREQUENCIES {
            for &a in &names::GABOR_ANGLES {
                gabor_pools[k].add(&gabor_magnitude(&plane, f, a as f64), &m);
                k += 1;
            }
        }
        for (pool, &s) in log_pools.iter_mut().zip(&names::LOG_SIGMAS) {
            pool.add(&log_filter(&plane, s), &m);
        }
        let v = frangi(&plane);
        let inner = erode(&m, w, h);
        let edge: Vec<bool> = m.iter().zip(&inner).map(|(&a, &b)| a && !b).collect();
        vessel_pools[0].add(&v, &m);
        vessel_pools[1].add(&v, &edge);
        vessel_pools[2].add(&v, &inner);
        inner_fallback.add(&v, &m);
        for (pool, img) in phase_pools.iter_mut().zip(phase_images(&plane)) {
            pool.add(&img, &m);
        }
    }
    if vessel_pools[2].values.is_empty() {
        vessel_pools[2] = inner_fallback;
    }

    let mut out = Vec::with_capacity(312);
    for pools in [&lbp_pools, &gabor_pools, &log_pools, &vessel_pools, &phase_pools] {
        for pool in pools.iter() {
            out.extend_from_slice(&pool.stats().to_array());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> Plane<f64> {
        Plane::new(24, 20, vec![v; 24 * 20])
    }

    #[test]
    fn reflect_indices() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect(i, 3)).collect();
        assert_eq!(idx, vec![2, 2, 1, 0, 0, 1, 2, 2, 1, 0, 0, 1]);
    }

    #[test]
    fn constant_image_has_no_filter_response() {
        let p = constant(-350.0);
        for &f in &names::GABOR_FREQUENCIES {
            for &a in &names::GABOR_ANGLES {
                let g = gabor_magnitude(&p, f, a as f64);
                assert!(g.data.iter().all(|&v| v <= 1e-8 * 350.0), "gabor f={f}");
            }
        }
        for &s in &names::LOG_SIGMAS {
            assert!(log_filter(&p, s).data.iter().all(|v| v.abs() <= 1e-8));
        }
        assert!(frangi(&p).data.iter().all(|&v| v == 0.0));
        let codes = lbp(&p, 2, 12);
        assert!(codes.data.iter().all(|&c| c == codes.data[0]));
        assert_eq!(stats13(&codes.data).std, 0.0);
    }

    #[test]
    fn log_responds_to_blob_with_negative_center() {
        let mut p = constant(0.0);
        for y in 8..12 {
            for x in 10..14 {
                p.data[y * 24 + x] = 100.0;
            }
        }
        let r = log_filter(&p, 1.0);
        assert!(r.get(11, 9) < 0.0);
    }

    #[test]
    fn ridge_is_more_vessel_like_than_blob() {
        let (w, h) = (32, 32);
        let mut ridge = Plane::new(w, h, vec![0.0f64; w * h]);
        for y in 0..h {
            for x in 15..18 {
                ridge.data[y * w + x] = 100.0;
            }
        }
        // equal-area disc
        let area = 3.0 * h as f64;
        let r = (area / std::f64::consts::PI).sqrt();
        let mut blob = Plane::new(w, h, vec![0.0f64; w * h]);
        let mut blob_mask = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if ((x as f64 - 16.0).powi(2) + (y as f64 - 16.0).powi(2)).sqrt() <= r {
                    blob.data[y * w + x] = 100.0;
                    blob_mask[y * w + x] = true;
                }
            }
        }
        let ridge_mask: Vec<bool> = ridge.data.iter().map(|&v| v > 0.0).collect();
        let mean_inner = |img: &Plane<f64>, m: &[bool]| {
            let inner = erode(m, w, h);
            let sel = if inner.iter().any(|&b| b) { inner } else { m.to_vec() };
            let v: Vec<f64> = frangi(img)
                .data
                .iter()
                .zip(&sel)
                .filter(|(_, &s)| s)
                .map(|(&v, _)| v)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let vr = mean_inner(&ridge, &ridge_mask);
        let vb = mean_inner(&blob, &blob_mask);
        assert!(vr > vb, "ridge {vr} blob {vb}");
    }

    #[test]
    fn lbp_codes_are_bounded() {
        let mut p = constant(0.0);
        for (i, v) in p.data.iter_mut().enumerate() {
            *v = ((i * 7919) % 97) as f64;
        }
        for &(r, n) in &names::LBP_PARAMS {
            let c = lbp(&p, r, n);
            assert!(c.data.iter().all(|&v| v >= 0.0 && v <= (n + 1) as f64));
        }
    }
}
