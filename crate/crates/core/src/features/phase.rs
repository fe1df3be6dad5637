//! Local phase measures from the monogenic signal: monogenic phase, phase
//! congruency and phase symmetry, using a bank of log-Gabor filters.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::features::filters::{centered, Plane};
use crate::features::stats::percentile_sorted;
use crate::scalar::Real;

pub const N_SCALES: usize = 4;
pub const MIN_WAVELENGTH: f64 = 3.0;
pub const SCALE_MULT: f64 = 2.1;
pub const SIGMA_ON_F: f64 = 0.55;
pub const NOISE_K: f64 = 2.0;
const EPS: f64 = 1e-4;

fn fft2<T: Real>(buf: &mut [Complex<T>], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let (fw, fh) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for row in buf.chunks_mut(w) {
        fw.process(row);
    }
    let mut col = vec![Complex::new(T::zero(), T::zero()); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        fh.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
    if inverse {
        let s = T::one() / T::of_usize(w * h);
        buf.iter_mut().for_each(|c| *c = *c * s);
    }
}

fn freq(k: usize, n: usize) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k < n_f / 2.0 {
        k / n_f
    } else {
        (k - n_f) / n_f
    }
}

/// Monogenic phase, phase congruency and phase symmetry of a plane.
///
/// The plane is mirrored to twice its size before filtering so the implied
/// periodic boundary is continuous.
pub fn phase_images<T: Real>(p: &Plane<T>) -> [Plane<T>; 3] {
    let p = &centered(p);
    let (w, h) = (p.width, p.height);
    let (pw, ph) = (2 * w, 2 * h);
    let mut spec: Vec<Complex<T>> = (0..pw * ph)
        .map(|i| Complex::new(p.mirrored((i % pw) as isize, (i / pw) as isize), T::zero()))
        .collect();
    fft2(&mut spec, pw, ph, false);

    let zero = Complex::new(T::zero(), T::zero());
    let n = w * h;
    let mut sum_e = vec![0.0f64; n];
    let mut sum_o1 = vec![0.0f64; n];
    let mut sum_o2 = vec![0.0f64; n];
    let mut sum_amp = vec![0.0f64; n];
    let mut sym = vec![0.0f64; n];
    let mut tau = 0.0;

    for s in 0..N_SCALES {
        let f0 = 1.0 / (MIN_WAVELENGTH * SCALE_MULT.powi(s as i32));
        let denom = 2.0 * SIGMA_ON_F.ln().powi(2);
        let mut even = vec![zero; pw * ph];
        let mut odd1 = vec![zero; pw * ph];
        let mut odd2 = vec![zero; pw * ph];
        for y in 0..ph {
            let v = freq(y, ph);
            for x in 0..pw {
                let u = freq(x, pw);
                let r = (u * u + v * v).sqrt();
                if r == 0.0 {
                    continue;
                }
                let lowpass = 1.0 / (1.0 + (r / 0.45).powi(30));
                let g = (-(r / f0).ln().powi(2) / denom).exp() * lowpass;
                let i = y * pw + x;
                let fg = spec[i] * T::of(g);
                even[i] = fg;
                // Riesz components i·u/r and i·v/r
                odd1[i] = fg * Complex::new(T::zero(), T::of(u / r));
                odd2[i] = fg * Complex::new(T::zero(), T::of(v / r));
            }
        }
        fft2(&mut even, pw, ph, true);
        fft2(&mut odd1, pw, ph, true);
        fft2(&mut odd2, pw, ph, true);
        let mut amps = Vec::with_capacity(n);
        for y in 0..h {
            for x in 0..w {
                let j = y * w + x;
                let i = y * pw + x;
                let (e, o1, o2) = (even[i].re.f64(), odd1[i].re.f64(), odd2[i].re.f64());
                let o = (o1 * o1 + o2 * o2).sqrt();
                let a = (e * e + o * o).sqrt();
                sum_e[j] += e;
                sum_o1[j] += o1;
                sum_o2[j] += o2;
                sum_amp[j] += a;
                sym[j] += e.abs() - o;
                amps.push(a);
            }
        }
        if s == 0 {
            amps.sort_by(|a, b| a.total_cmp(b));
            tau = percentile_sorted(&amps, 0.5) / 4f64.ln().sqrt();
        }
    }

    let total_tau = tau * (1.0 - (1.0 / SCALE_MULT).powi(N_SCALES as i32)) / (1.0 - 1.0 / SCALE_MULT);
    let noise_mean = total_tau * (std::f64::consts::PI / 2.0).sqrt();
    let noise_sigma = total_tau * ((4.0 - std::f64::consts::PI) / 2.0).sqrt();
    let threshold = noise_mean + NOISE_K * noise_sigma;

    let mut mono = Vec::with_capacity(n);
    let mut cong = Vec::with_capacity(n);
    let mut symm = Vec::with_capacity(n);
    for j in 0..n {
        let odd = (sum_o1[j].powi(2) + sum_o2[j].powi(2)).sqrt();
        mono.push(T::of(odd.atan2(sum_e[j])));
        let energy = (sum_e[j].powi(2) + odd * odd).sqrt();
        cong.push(T::of((energy - threshold).max(0.0) / (sum_amp[j] + EPS)));
        symm.push(T::of((sym[j] - threshold).max(0.0) / (sum_amp[j] + EPS)));
    }
    [Plane::new(w, h, mono), Plane::new(w, h, cong), Plane::new(w, h, symm)]
}
