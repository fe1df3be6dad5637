//! Hypothesis tests and agreement statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::evaluate::metrics::auc;

fn normal_sf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").sf(z)
}

/// Mann-Whitney U of `x` against `y` (pairs with `x > y`, ties ½) and the
/// two-sided p-value: exact enumeration when `n + m <= 12`, otherwise the
/// tie-corrected normal approximation with continuity correction.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("Mann-Whitney U needs two non-empty samples"));
    }
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let u_of = |rx: f64| rx - (n * (n + 1)) as f64 / 2.0;
    let u = u_of(ranks[..n].iter().sum());
    let mu = (n * m) as f64 / 2.0;
    let dev = (u - mu).abs();
    let total = n + m;
    if total <= 12 {
        let mut extreme = 0u64;
        let mut count = 0u64;
        for bits in 0u32..(1u32 << total) {
            if bits.count_ones() as usize != n {
                continue;
            }
            let rx: f64 = (0..total).filter(|&i| bits >> i & 1 == 1).map(|i| ranks[i]).sum();
            count += 1;
            if (u_of(rx) - mu).abs() >= dev - 1e-9 {
                extreme += 1;
            }
        }
        return Ok((u, extreme as f64 / count as f64));
    }
    let nf = total as f64;
    let tie_term = tie_sum(&pooled);
    let var = (n * m) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if !(var > 0.0) {
        return Ok((u, 1.0));
    }
    let z = (dev - 0.5).max(0.0) / var.sqrt();
    Ok((u, (2.0 * normal_sf(z)).min(1.0)))
}

/// Midranks (1-based) of `v`.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn tie_sum(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let mut acc = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        acc += t * t * t - t;
        i = j + 1;
    }
    acc
}

/// Pearson chi-square p-value of an `r × c` contingency table. Empty rows and
/// columns are dropped; 2×2 tables use the Yates continuity correction.
pub fn chi_square(table: &[Vec<f64>]) -> Result<f64> {
    if table.is_empty() || table.iter().any(|r| r.len() != table[0].len()) {
        return Err(Error::invalid("contingency table must be rectangular and non-empty"));
    }
    if table.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("contingency counts must be finite and non-negative"));
    }
    let rows: Vec<&Vec<f64>> = table.iter().filter(|r| r.iter().sum::<f64>() > 0.0).collect();
    let cols: Vec<usize> = (0..table[0].len())
        .filter(|&j| rows.iter().map(|r| r[j]).sum::<f64>() > 0.0)
        .collect();
    let (r, c) = (rows.len(), cols.len());
    if r < 2 || c < 2 {
        return Ok(1.0);
    }
    let row_tot: Vec<f64> = rows.iter().map(|row| cols.iter().map(|&j| row[j]).sum()).collect();
    let col_tot: Vec<f64> = cols.iter().map(|&j| rows.iter().map(|row| row[j]).sum()).collect();
    let n: f64 = row_tot.iter().sum();
    let yates = r == 2 && c == 2;
    let mut stat = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for (k, &j) in cols.iter().enumerate() {
            let e = row_tot[i] * col_tot[k] / n;
            let mut d = (row[j] - e).abs();
            if yates {
                d = (d - 0.5).max(0.0);
            }
            stat += d * d / e;
        }
    }
    let dof = ((r - 1) * (c - 1)) as f64;
    Ok(ChiSquared::new(dof).map_err(|e| Error::invalid(e.to_string()))?.sf(stat))
}

pub fn bonferroni(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    p.iter().map(|&v| (v * m).min(1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub z: f64,
    pub p: f64,
    /// Zero variance with unequal AUCs; `p` is then the limit 0.
    pub degenerate: bool,
}

fn psi(x: f64, y: f64) -> f64 {
    if x > y {
        1.0
    } else if x == y {
        0.5
    } else {
        0.0
    }
}

/// Paired DeLong test of two score vectors on the same patients.
pub fn delong_test(a: &[f64], b: &[f64], labels: &[u8]) -> Result<DelongResult> {
    if a.len() != b.len() || a.len() != labels.len() {
        return Err(Error::invalid("DeLong needs paired score vectors of equal length"));
    }
    let auc_a = auc(a, labels)?;
    let auc_b = auc(b, labels)?;
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    let (m, n) = (pos.len() as f64, neg.len() as f64);
    let components = |s: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let v10 = pos.iter().map(|&i| neg.iter().map(|&j| psi(s[i], s[j])).sum::<f64>() / n).collect();
        let v01 = neg.iter().map(|&j| pos.iter().map(|&i| psi(s[i], s[j])).sum::<f64>() / m).collect();
        (v10, v01)
    };
    let (a10, a01) = components(a);
    let (b10, b01) = components(b);
    let cov = |u: &[f64], v: &[f64]| -> f64 {
        if u.len() < 2 {
            return 0.0;
        }
        let mu = u.iter().sum::<f64>() / u.len() as f64;
        let mv = v.iter().sum::<f64>() / v.len() as f64;
        u.iter().zip(v).map(|(x, y)| (x - mu) * (y - mv)).sum::<f64>() / (u.len() as f64 - 1.0)
    };
    let var = (cov(&a10, &a10) + cov(&b10, &b10) - 2.0 * cov(&a10, &b10)) / m
        + (cov(&a01, &a01) + cov(&b01, &b01) - 2.0 * cov(&a01, &b01)) / n;
    let diff = auc_a - auc_b;
    if diff == 0.0 {
        return Ok(DelongResult { auc_a, auc_b, z: 0.0, p: 1.0, degenerate: false });
    }
    if !(var > 1e-300) {
        return Ok(DelongResult { auc_a, auc_b, z: f64::INFINITY.copysign(diff), p: 0.0, degenerate: true });
    }
    let z = diff / var.sqrt();
    Ok(DelongResult { auc_a, auc_b, z, p: (2.0 * normal_sf(z.abs())).min(1.0), degenerate: false })
}

/// Cohen's kappa with marginal-product chance agreement; 1 when chance agreement is 1.
pub fn cohens_kappa<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid("kappa needs paired, non-empty ratings"));
    }
    let cats: Vec<T> = a.iter().chain(b).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let k = cats.len();
    let pos = |v: &T| cats.binary_search(v).expect("category present");
    let mut table = vec![vec![0.0; k]; k];
    for (x, y) in a.iter().zip(b) {
        table[pos(x)][pos(y)] += 1.0;
    }
    Ok(kappa_from_table(&table))
}

/// Kappa from a square confusion table (rows: rater A, columns: rater B).
pub fn kappa_from_table(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    let k = table.len();
    let po = (0..k).map(|i| table[i][i]).sum::<f64>() / n;
    let pe = (0..k)
        .map(|i| table[i].iter().sum::<f64>() * table.iter().map(|r| r[i]).sum::<f64>())
        .sum::<f64>()
        / (n * n);
    if pe == 1.0 {
        return 1.0;
    }
    (po - pe) / (1.0 - pe)
}
