//! Outer cross-validation split plans.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    RandomSplit,
    LeaveOneOut,
}

/// Row indices of one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub splits: Vec<Split>,
}

/// Per-class test counts: `floor(f·n_c)`, then the remaining slots up to
/// `round(f·N)` go to the largest fractional remainders (ties to the lower class).
pub fn stratified_counts(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = class_sizes.iter().map(|&n| fraction * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = target.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if left == 0 {
            break;
        }
        if counts[c] < class_sizes[c] {
            counts[c] += 1;
            left -= 1;
        }
    }
    counts
}

/// Stratified split of `labels` with shuffles drawn from `(seed, i)` per iteration.
pub fn random_split_plan(labels: &[u8], n_iter: usize, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test fraction must be in (0, 1)"));
    }
    let classes: Vec<Vec<usize>> = [0u8, 1]
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    if classes.iter().any(|c| c.len() < 2) {
        return Err(Error::invalid("each class needs at least 2 patients"));
    }
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    let counts = stratified_counts(&sizes, test_fraction);
    if counts.iter().zip(&sizes).any(|(&c, &n)| c == 0 || c >= n) {
        return Err(Error::invalid("test fraction leaves a class without test or training patients"));
    }
    let splits = (0..n_iter)
        .map(|it| {
            let mut r = rng::stream(seed, it as u64);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (members, &k) in classes.iter().zip(&counts) {
                let mut m = members.clone();
                m.shuffle(&mut r);
                test.extend_from_slice(&m[..k]);
                train.extend_from_slice(&m[k..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect();
    Ok(SplitPlan { mode: SplitMode::RandomSplit, splits })
}

pub fn leave_one_out_plan(n: usize) -> SplitPlan {
    let splits = (0..n)
        .map(|i| Split { train: (0..n).filter(|&j| j != i).collect(), test: vec![i] })
        .collect();
    SplitPlan { mode: SplitMode::LeaveOneOut, splits }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_population_counts() {
        assert_eq!(stratified_counts(&[125, 122], 0.2), vec![25, 24]);
        assert_eq!(stratified_counts(&[4, 4], 0.5), vec![2, 2]);
    }

    #[test]
    fn plans_are_disjoint_and_exhaustive() {
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let plan = random_split_plan(&labels, 5, 0.2, 7).unwrap();
        for s in &plan.splits {
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..30).collect::<Vec<_>>());
            assert_eq!(s.test.iter().filter(|&&i| labels[i] == 1).count(), 2);
        }
        assert_eq!(plan, random_split_plan(&labels, 5, 0.2, 7).unwrap());
        let loo = leave_one_out_plan(7);
        assert_eq!(loo.splits.len(), 7);
        assert!(loo.splits.iter().all(|s| s.test.len() == 1 && s.train.len() == 6));
    }
}
