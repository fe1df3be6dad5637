//! Classification metrics and the corrected resampled confidence interval.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn split_classes(scores: &[f64], labels: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l != 1).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("AUC needs both classes"));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve as the concordant-pair fraction, ties ½.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = split_classes(scores, labels)?;
    // rank-sum form; equivalent to pair counting with ties at ½
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += all[i..=j].iter().filter(|e| e.1).count() as f64 * mid;
        i = j + 1;
    }
    let (m, n) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - m * (m + 1.0) / 2.0) / (m * n))
}

pub fn bca(sensitivity: f64, specificity: f64) -> f64 {
    (sensitivity + specificity) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    /// Hard labels at `score >= threshold`.
    pub fn at(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    /// NaN when there are no positives.
    pub fn sensitivity(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }

    /// Positive-class F1; 0 when there is no true positive.
    pub fn f1(&self) -> f64 {
        if self.tp == 0 {
            return 0.0;
        }
        2.0 * self.tp as f64 / (2 * self.tp + self.fp + self.fn_) as f64
    }
}

/// `(sensitivity, specificity, bca)` at `threshold`.
pub fn confusion_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> (f64, f64, f64) {
    let c = Confusion::at(scores, labels, threshold);
    let (se, sp) = (c.sensitivity(), c.specificity());
    (se, sp, bca(se, sp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Corrected resampled t interval over `k` cross-validation iterations:
/// `mean ± t(k−1) · sqrt((1/k + n_test/n_train) · s²)`. Bounds are not clipped.
pub fn corrected_resampled_ci(values: &[f64], n_train: usize, n_test: usize, level: f64) -> Result<Interval> {
    let k = values.len();
    if k < 2 {
        return Err(Error::invalid("a corrected resampled interval needs at least 2 iterations"));
    }
    if n_train == 0 {
        return Err(Error::invalid("training size must be positive"));
    }
    let kf = k as f64;
    let mean = values.iter().sum::<f64>() / kf;
    let s2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (kf - 1.0);
    let t = StudentsT::new(0.0, 1.0, kf - 1.0)
        .map_err(|e| Error::invalid(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * ((1.0 / kf + n_test as f64 / n_train as f64) * s2).sqrt();
    Ok(Interval { mean, lower: mean - half, upper: mean + half })
}

/// Two-decimal bound with `<0.00` / `>1.00` markers outside the unit interval.
pub fn format_bound(v: f64) -> String {
    if v < 0.0 {
        "<0.00".to_string()
    } else if v > 1.0 {
        ">1.00".to_string()
    } else {
        format!("{v:.2}")
    }
}

/// `0.75 [<0.00, >1.00]`.
pub fn format_interval(ci: &Interval) -> String {
    format!("{:.2} [{}, {}]", ci.mean, format_bound(ci.lower), format_bound(ci.upper))
}
