//! Batch harmonization (parametric empirical-Bayes ComBat), two-observer
//! ICC and Dice overlap.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureTable, RoiMask};

const COMBAT_TOL: f64 = 1e-4;
const COMBAT_MAX_ITER: usize = 1000;

/// Fitted ComBat parameters, one entry per feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchModel {
    pub batches: Vec<String>,
    pub grand_mean: Vec<f64>,
    pub pooled_sd: Vec<f64>,
    /// `gamma[b][g]`: shrunk additive batch effect in standardized units.
    pub gamma: Vec<Vec<f64>>,
    /// `delta[b][g]`: shrunk multiplicative batch effect (a variance ratio).
    pub delta: Vec<Vec<f64>>,
    /// Subtracted after adjustment so the training grand mean is preserved.
    pub recenter: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Batch index per row, in sorted batch-name order.
fn batch_index(batches: &[String]) -> (Vec<String>, Vec<usize>) {
    let names: Vec<String> = batches
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let idx = batches
        .iter()
        .map(|b| names.binary_search(b).expect("present"))
        .collect();
    (names, idx)
}

impl BatchModel {
    /// Fits ComBat on row-major `x` (`n × p`). Requires ≥ 2 batches of ≥ 2 rows.
    pub fn fit(x: &[f64], p: usize, batches: &[String]) -> Result<Self> {
        Self::fit_with_min_batches(x, p, batches, 2)
    }

    /// As [`fit`](Self::fit) with a configurable batch-count floor; a floor
    /// of 1 permits the single-batch identity case.
    pub fn fit_with_min_batches(x: &[f64], p: usize, batches: &[String], min_batches: usize) -> Result<Self> {
        let n = batches.len();
        if x.len() != n * p {
            return Err(Error::invalid("feature matrix and batch labels disagree in size"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("ComBat requires finite feature values"));
        }
        let (names, idx) = batch_index(batches);
        if names.len() < min_batches {
            return Err(Error::invalid(format!(
                "ComBat needs at least {min_batches} batches, found {}",
                names.len()
            )));
        }
        let nb = names.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for (r, &b) in idx.iter().enumerate() {
            members[b].push(r);
        }
        if let Some(b) = members.iter().position(|m| m.len() < 2) {
            return Err(Error::invalid(format!("batch `{}` has fewer than 2 samples", names[b])));
        }

        let col = |g: usize| -> Vec<f64> { (0..n).map(|r| x[r * p + g]).collect() };
        let mut grand_mean = vec![0.0; p];
        let mut pooled_sd = vec![0.0; p];
        let mut gamma_hat = vec![vec![0.0; p]; nb];
        let mut delta_hat = vec![vec![1.0; p]; nb];
        let mut active = vec![false; p];
        let mut std_data: Vec<Vec<f64>> = vec![Vec::new(); p];
        for g in 0..p {
            let c = col(g);
            let gm = mean(&c);
            let bmeans: Vec<f64> = members.iter().map(|m| mean(&m.iter().map(|&r| c[r]).collect::<Vec<_>>())).collect();
            let ss: f64 = c.iter().zip(&idx).map(|(v, &b)| (v - bmeans[b]).powi(2)).sum();
            let var = ss / (n - nb) as f64;
            grand_mean[g] = gm;
            pooled_sd[g] = var.sqrt();
            if !(var > 0.0) {
                continue;
            }
            let s: Vec<f64> = c.iter().map(|v| (v - gm) / var.sqrt()).collect();
            let mut ok = true;
            for (b, m) in members.iter().enumerate() {
                let sb: Vec<f64> = m.iter().map(|&r| s[r]).collect();
                gamma_hat[b][g] = mean(&sb);
                delta_hat[b][g] = sample_var(&sb);
                ok &= delta_hat[b][g] > 0.0;
            }
            active[g] = ok;
            std_data[g] = s;
        }

        let act: Vec<usize> = (0..p).filter(|&g| active[g]).collect();
        let mut gamma = gamma_hat.clone();
        let mut delta = delta_hat.clone();
        for b in 0..nb {
            if act.len() < 2 {
                break;
            }
            let gh: Vec<f64> = act.iter().map(|&g| gamma_hat[b][g]).collect();
            let dh: Vec<f64> = act.iter().map(|&g| delta_hat[b][g]).collect();
            let gamma_bar = mean(&gh);
            let t2 = sample_var(&gh);
            let m = mean(&dh);
            let s2 = sample_var(&dh);
            let prior = if s2 > 0.0 && s2.is_finite() {
                Some(((2.0 * s2 + m * m) / s2, (m * s2 + m * m * m) / s2))
            } else {
                None
            };
            let nbf = members[b].len() as f64;
            for &g in &act {
                let sb: Vec<f64> = members[b].iter().map(|&r| std_data[g][r]).collect();
                let (gs, ds) = it_sol(&sb, gamma_hat[b][g], delta_hat[b][g], gamma_bar, t2, prior, nbf);
                gamma[b][g] = gs;
                delta[b][g] = ds;
            }
        }

        let mut model = Self {
            batches: names,
            grand_mean,
            pooled_sd,
            gamma,
            delta,
            recenter: vec![0.0; p],
        };
        for g in (0..p).filter(|&g| !active[g]) {
            for b in 0..nb {
                model.gamma[b][g] = 0.0;
                model.delta[b][g] = 1.0;
            }
        }
        let adjusted = model.apply(x, p, batches)?;
        for g in 0..p {
            let m = mean(&(0..n).map(|r| adjusted[r * p + g]).collect::<Vec<_>>());
            model.recenter[g] = m - model.grand_mean[g];
        }
        Ok(model)
    }

    pub fn n_features(&self) -> usize {
        self.grand_mean.len()
    }

    /// Removes the fitted batch effects from `x`. Every row's batch must have
    /// been seen at fit time.
    pub fn apply(&self, x: &[f64], p: usize, batches: &[String]) -> Result<Vec<f64>> {
        if p != self.n_features() || x.len() != batches.len() * p {
            return Err(Error::invalid("feature matrix does not match the fitted ComBat model"));
        }
        let mut out = x.to_vec();
        for (r, name) in batches.iter().enumerate() {
            let b = self
                .batches
                .binary_search(name)
                .map_err(|_| Error::invalid(format!("batch `{name}` was not seen when fitting ComBat")))?;
            for g in 0..p {
                let sd = self.pooled_sd[g];
                if !(sd > 0.0) {
                    continue;
                }
                let s = (x[r * p + g] - self.grand_mean[g]) / sd;
                let adj = (s - self.gamma[b][g]) / self.delta[b][g].sqrt();
                out[r * p + g] = adj * sd + self.grand_mean[g] - self.recenter[g];
            }
        }
        Ok(out)
    }

    /// Stable digest of the fitted parameters.
    pub fn fingerprint(&self) -> String {
        crate::digest_bytes(&bincode::serialize(self).expect("serializable"))
    }
}

/// Iterative posterior estimate of one batch's location and scale for one feature.
fn it_sol(
    s: &[f64],
    g_hat: f64,
    d_hat: f64,
    g_bar: f64,
    t2: f64,
    prior: Option<(f64, f64)>,
    n: f64,
) -> (f64, f64) {
    let mut g_old = g_hat;
    let mut d_old = d_hat;
    for _ in 0..COMBAT_MAX_ITER {
        let g_new = (n * t2 * g_hat + d_old * g_bar) / (n * t2 + d_old);
        let d_new = match prior {
            Some((a, b)) => {
                let sum2: f64 = s.iter().map(|v| (v - g_new).powi(2)).sum();
                (0.5 * sum2 + b) / (n / 2.0 + a - 1.0)
            }
            None => d_hat,
        };
        if !g_new.is_finite() || !(d_new > 0.0) {
            return (g_hat, d_hat);
        }
        let change = ((g_new - g_old) / g_old).abs().max(((d_new - d_old) / d_old).abs());
        g_old = g_new;
        d_old = d_new;
        if !(change > COMBAT_TOL) {
            break;
        }
    }
    (g_old, d_old)
}

/// ComBat over a feature table with one batch label per row.
pub fn combat_table(table: &FeatureTable, batches: &[String]) -> Result<(BatchModel, FeatureTable)> {
    let model = BatchModel::fit(table.values(), table.n_cols(), batches)?;
    let values = model.apply(table.values(), table.n_cols(), batches)?;
    Ok((model, table.with_values(values)?))
}

/// Two-way, absolute-agreement, single-rater ICC for two observers.
/// Returns 1 when every rating is identical.
pub fn icc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("ICC needs two equal-length rating vectors of at least 2 subjects"));
    }
    let n = a.len() as f64;
    let k = 2.0;
    let grand = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / (n * k);
    let ss_rows: f64 = a.iter().zip(b).map(|(x, y)| ((x + y) / 2.0 - grand).powi(2)).sum::<f64>() * k;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let ss_cols = n * ((ma - grand).powi(2) + (mb - grand).powi(2));
    let ss_total: f64 = a.iter().chain(b).map(|v| (v - grand).powi(2)).sum();
    let ss_err = (ss_total - ss_rows - ss_cols).max(0.0);
    let msr = ss_rows / (n - 1.0);
    let msc = ss_cols / (k - 1.0);
    let mse = ss_err / ((n - 1.0) * (k - 1.0));
    let denom = msr + (k - 1.0) * mse + k * (msc - mse) / n;
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if denom.abs() <= 1e-24 * scale * scale {
        return Ok(1.0);
    }
    Ok((msr - mse) / denom)
}

/// Per-feature ICC between two observers' tables, matched on patient id and
/// feature name. Features missing in any subject yield NaN.
pub fn icc_table(a: &FeatureTable, b: &FeatureTable) -> Result<Vec<(String, f64)>> {
    if a.names() != b.names() {
        return Err(Error::invalid("observer tables have different feature columns"));
    }
    let rows_b: BTreeMap<&str, usize> = b.ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let pairs: Vec<(usize, usize)> = a
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| rows_b.get(id.as_str()).map(|&j| (i, j)))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::invalid("observer tables share fewer than 2 patients"));
    }
    a.names()
        .iter()
        .enumerate()
        .map(|(g, name)| {
            let va: Vec<f64> = pairs.iter().map(|&(i, _)| a.get(i, g)).collect();
            let vb: Vec<f64> = pairs.iter().map(|&(_, j)| b.get(j, g)).collect();
            let v = if va.iter().chain(&vb).all(|v| v.is_finite()) { icc(&va, &vb)? } else { f64::NAN };
            Ok((name.clone(), v))
        })
        .collect()
}

/// Names of features whose ICC strictly exceeds `threshold`.
pub fn icc_filter(iccs: &[(String, f64)], threshold: f64) -> Vec<String> {
    iccs.iter()
        .filter(|(_, v)| *v > threshold)
        .map(|(n, _)| n.clone())
        .collect()
}

/// Dice similarity coefficient; two empty masks score 1.
pub fn dice(a: &RoiMask, b: &RoiMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::invalid(format!("mask dims differ: {:?} vs {:?}", a.dims(), b.dims())));
    }
    let inter = a.voxels().iter().zip(b.voxels()).filter(|(&x, &y)| x && y).count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}
