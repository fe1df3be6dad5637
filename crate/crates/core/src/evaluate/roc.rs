//! ROC curves, grid resampling and fixed-width confidence bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points of the false-positive-rate grid.
pub const GRID_POINTS: usize = 101;

/// Empirical ROC polyline from `(0,0)` to `(1,1)`, one vertex per distinct threshold.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64)>> {
    let p = labels.iter().filter(|&&l| l == 1).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 || scores.len() != labels.len() {
        return Err(Error::invalid("ROC needs both classes and one score per label"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(pts)
}

pub fn fpr_grid() -> Vec<f64> {
    (0..GRID_POINTS).map(|i| i as f64 / (GRID_POINTS - 1) as f64).collect()
}

/// TPR of a monotone polyline on the FPR grid; on vertical segments the
/// upper end is taken.
pub fn resample(curve: &[(f64, f64)]) -> Vec<f64> {
    fpr_grid()
        .into_iter()
        .map(|f| {
            let mut best = 0.0f64;
            for w in curve.windows(2) {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                if f < x0 || f > x1 {
                    continue;
                }
                let y = if x1 == x0 { y1 } else { y0 + (y1 - y0) * (f - x0) / (x1 - x0) };
                best = best.max(y);
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocBand {
    pub fpr: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    pub half_width: f64,
}

/// Pointwise mean of grid-resampled curves and the smallest half-width such
/// that at least `level` of the curves lie entirely within it (vertical offset).
pub fn roc_band(curves: &[Vec<f64>], level: f64) -> Result<RocBand> {
    if curves.len() < 2 {
        return Err(Error::invalid("a ROC band needs at least 2 curves"));
    }
    if curves.iter().any(|c| c.len() != GRID_POINTS) {
        return Err(Error::invalid("curves must be resampled onto the common grid"));
    }
    let k = curves.len() as f64;
    let mean: Vec<f64> = (0..GRID_POINTS).map(|g| curves.iter().map(|c| c[g]).sum::<f64>() / k).collect();
    let mut dev: Vec<f64> = curves
        .iter()
        .map(|c| c.iter().zip(&mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    dev.sort_by(|a, b| a.total_cmp(b));
    let need = ((level * k).ceil() as usize).clamp(1, curves.len());
    Ok(RocBand { fpr: fpr_grid(), mean_tpr: mean, half_width: dev[need - 1] })
}
