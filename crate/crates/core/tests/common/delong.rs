//! Paired AUC comparison reference: a stratified bootstrap of the AUC difference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

/// Fraction of positive/negative pairs ranked correctly, ties counting half.
pub fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi == 1 && yj == 0 {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    wins / pairs
}

/// Two correlated readers on ten positive and ten negative patients.
pub fn constructed_case() -> (Vec<f64>, Vec<f64>, Vec<u8>) {
    let mut r = ChaCha8Rng::seed_from_u64(20);
    let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &l in &y {
        let shared: f64 = r.sample(StandardNormal);
        let ea: f64 = r.sample(StandardNormal);
        let eb: f64 = r.sample(StandardNormal);
        a.push(1.2 * l as f64 + shared + 0.6 * ea);
        b.push(0.5 * l as f64 + shared + 0.6 * eb);
    }
    (a, b, y)
}

/// Two-sided p of the AUC difference with a stratified bootstrap standard error.
pub fn bootstrap_p(a: &[f64], b: &[f64], y: &[u8], resamples: usize, seed: u64) -> f64 {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    let observed = pair_count_auc(a, y) - pair_count_auc(b, y);
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut diffs = Vec::with_capacity(resamples);
    let mut ra = Vec::with_capacity(y.len());
    let mut rb = Vec::with_capacity(y.len());
    let mut ry = Vec::with_capacity(y.len());
    for _ in 0..resamples {
        ra.clear();
        rb.clear();
        ry.clear();
        for (group, label) in [(&pos, 1u8), (&neg, 0u8)] {
            for _ in 0..group.len() {
                let i = group[r.gen_range(0..group.len())];
                ra.push(a[i]);
                rb.push(b[i]);
                ry.push(label);
            }
        }
        diffs.push(pair_count_auc(&ra, &ry) - pair_count_auc(&rb, &ry));
    }
    let m = diffs.iter().sum::<f64>() / resamples as f64;
    let sd = (diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (resamples as f64 - 1.0)).sqrt();
    2.0 * Normal::new(0.0, 1.0).unwrap().sf(observed.abs() / sd)
}

