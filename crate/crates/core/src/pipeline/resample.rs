//! Class-imbalance resampling.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::matrix::{nearest, Matrix};
use crate::rng::Rng;

/// Neighbours used by SMOTE variants and ADASYN.
pub const SMOTE_K: usize = 5;
/// Neighbours used by NearMiss, ENN and the cleaning rule.
pub const CLEAN_K: usize = 3;
/// Neighbourhood for borderline danger detection.
pub const BORDERLINE_M: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampler {
    None,
    RandomOver,
    RandomUnder,
    NearMiss { version: u8 },
    NeighbourhoodCleaning,
    Adasyn,
    Smote,
    SmoteBorderline,
    SmoteTomek,
    SmoteEnn,
}

impl Resampler {
    fn neighbours(self) -> usize {
        match self {
            Resampler::NearMiss { .. } | Resampler::NeighbourhoodCleaning => CLEAN_K,
            Resampler::Adasyn | Resampler::Smote | Resampler::SmoteBorderline | Resampler::SmoteTomek | Resampler::SmoteEnn => SMOTE_K,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub x: Matrix,
    pub y: Vec<u8>,
    /// Set when a neighbour method fell back to random over-sampling.
    pub fell_back: bool,
}

fn class_rows(y: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 1).collect();
    (pos, neg)
}

/// `(minority label, minority rows, majority rows)`; ties make class 1 the minority.
fn minority(y: &[u8]) -> (u8, Vec<usize>, Vec<usize>) {
    let (pos, neg) = class_rows(y);
    if pos.len() <= neg.len() {
        (1, pos, neg)
    } else {
        (0, neg, pos)
    }
}

pub fn resample(x: &Matrix, y: &[u8], kind: Resampler, rng: &mut Rng) -> Result<Resampled> {
    let (_, min_rows, maj_rows) = minority(y);
    if min_rows.is_empty() {
        return Err(Error::invalid("resampling needs both classes"));
    }
    let k = kind.neighbours();
    if k > 0 && min_rows.len() <= k {
        let (x, y) = random_over(x, y, rng);
        return Ok(Resampled { x, y, fell_back: true });
    }
    let _ = maj_rows;
    let (x, y) = match kind {
        Resampler::None => (x.clone(), y.to_vec()),
        Resampler::RandomOver => random_over(x, y, rng),
        Resampler::RandomUnder => random_under(x, y, rng),
        Resampler::NearMiss { version } => near_miss(x, y, version),
        Resampler::NeighbourhoodCleaning => neighbourhood_cleaning(x, y),
        Resampler::Adasyn => adasyn(x, y, rng),
        Resampler::Smote => smote(x, y, rng, None),
        Resampler::SmoteBorderline => {
            let danger = borderline_danger(x, y);
            if danger.is_empty() {
                (x.clone(), y.to_vec())
            } else {
                smote(x, y, rng, Some(&danger))
            }
        }
        Resampler::SmoteTomek => {
            let (x, y) = smote(x, y, rng, None);
            tomek_links(&x, &y)
        }
        Resampler::SmoteEnn => {
            let (x, y) = smote(x, y, rng, None);
            edited_nearest(&x, &y)
        }
    };
    let (p, n) = class_rows(&y);
    if p.is_empty() || n.is_empty() {
        return Err(Error::Degenerate("resampling removed a class".into()));
    }
    Ok(Resampled { x, y, fell_back: false })
}

fn random_over(x: &Matrix, y: &[u8], rng: &mut Rng) -> (Matrix, Vec<u8>) {
    let (label, min_rows, maj_rows) = minority(y);
    let mut out = x.clone();
    let mut oy = y.to_vec();
    for _ in min_rows.len()..maj_rows.len() {
        let i = *min_rows.choose(rng).expect("non-empty");
        out.push_row(x.row(i));
        oy.push(label);
    }
    (out, oy)
}

fn random_under(x: &Matrix, y: &[u8], rng: &mut Rng) -> (Matrix, Vec<u8>) {
    let (_, min_rows, maj_rows) = minority(y);
    let mut keep: Vec<usize> = maj_rows.choose_multiple(rng, min_rows.len()).copied().collect();
    keep.extend(&min_rows);
    keep.sort_unstable();
    (x.select_rows(&keep), keep.iter().map(|&i| y[i]).collect())
}

fn mean_dist(x: &Matrix, from: usize, to: &[usize]) -> f64 {
    to.iter().map(|&j| crate::pipeline::matrix::sq_dist(x.row(from), x.row(j)).sqrt()).sum::<f64>() / to.len() as f64
}

/// NearMiss under-sampling of the majority class.
fn near_miss(x: &Matrix, y: &[u8], version: u8) -> (Matrix, Vec<u8>) {
    let (_, min_rows, maj_rows) = minority(y);
    let k = CLEAN_K.min(min_rows.len());
    let mut candidates = maj_rows.clone();
    if version == 3 {
        let mut set: Vec<usize> = min_rows
            .iter()
            .flat_map(|&i| nearest(x, &maj_rows, x.row(i), CLEAN_K, None))
            .collect();
        set.sort_unstable();
        set.dedup();
        candidates = set;
    }
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&j| {
            let d = match version {
                2 => {
                    let mut all: Vec<(f64, usize)> = min_rows.iter().map(|&i| (crate::pipeline::matrix::sq_dist(x.row(j), x.row(i)), i)).collect();
                    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                    let far: Vec<usize> = all.iter().take(k).map(|e| e.1).collect();
                    mean_dist(x, j, &far)
                }
                3 => -mean_dist(x, j, &nearest(x, &min_rows, x.row(j), k, None)),
                _ => mean_dist(x, j, &nearest(x, &min_rows, x.row(j), k, None)),
            };
            (d, j)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = scored.iter().take(min_rows.len()).map(|e| e.1).collect();
    keep.extend(&min_rows);
    keep.sort_unstable();
    (x.select_rows(&keep), keep.iter().map(|&i| y[i]).collect())
}

fn majority_vote(y: &[u8], idx: &[usize]) -> u8 {
    let pos = idx.iter().filter(|&&i| y[i] == 1).count();
    u8::from(2 * pos > idx.len())
}

/// Edited nearest neighbours: drop every sample whose neighbours are not all of its class.
fn edited_nearest(x: &Matrix, y: &[u8]) -> (Matrix, Vec<u8>) {
    let all: Vec<usize> = (0..x.rows).collect();
    let keep: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| nearest(x, &all, x.row(i), CLEAN_K, Some(i)).iter().all(|&j| y[j] == y[i]))
        .collect();
    (x.select_rows(&keep), keep.iter().map(|&i| y[i]).collect())
}

/// Neighbourhood cleaning rule: majority samples misclassified by their
/// neighbours are removed, as are majority neighbours of misclassified
/// minority samples.
fn neighbourhood_cleaning(x: &Matrix, y: &[u8]) -> (Matrix, Vec<u8>) {
    let (label, _, _) = minority(y);
    let all: Vec<usize> = (0..x.rows).collect();
    let mut drop = vec![false; x.rows];
    for i in 0..x.rows {
        let nn = nearest(x, &all, x.row(i), CLEAN_K, Some(i));
        if majority_vote(y, &nn) != y[i] {
            if y[i] == label {
                for j in nn.into_iter().filter(|&j| y[j] != label) {
                    drop[j] = true;
                }
            } else {
                drop[i] = true;
            }
        }
    }
    let keep: Vec<usize> = all.into_iter().filter(|&i| !drop[i]).collect();
    (x.select_rows(&keep), keep.iter().map(|&i| y[i]).collect())
}

fn synthesize(x: &Matrix, a: usize, b: usize, rng: &mut Rng) -> Vec<f64> {
    let t: f64 = rng.gen_range(0.0..1.0);
    x.row(a).iter().zip(x.row(b)).map(|(u, v)| u + t * (v - u)).collect()
}

/// SMOTE up to the majority count. Seeds are drawn from `seeds` (default:
/// all minority rows); partners from each seed's minority neighbours.
fn smote(x: &Matrix, y: &[u8], rng: &mut Rng, seeds: Option<&[usize]>) -> (Matrix, Vec<u8>) {
    let (label, min_rows, maj_rows) = minority(y);
    let seeds: Vec<usize> = seeds.map(<[usize]>::to_vec).unwrap_or_else(|| min_rows.clone());
    let mut out = x.clone();
    let mut oy = y.to_vec();
    let neigh: Vec<Vec<usize>> = seeds.iter().map(|&i| nearest(x, &min_rows, x.row(i), SMOTE_K, Some(i))).collect();
    for _ in min_rows.len()..maj_rows.len() {
        let s = rng.gen_range(0..seeds.len());
        let partner = *neigh[s].choose(rng).expect("minority has neighbours");
        out.push_row(&synthesize(x, seeds[s], partner, rng));
        oy.push(label);
    }
    (out, oy)
}

/// Minority rows with at least half, but not all, of their neighbours in the majority.
fn borderline_danger(x: &Matrix, y: &[u8]) -> Vec<usize> {
    let (label, min_rows, _) = minority(y);
    let all: Vec<usize> = (0..x.rows).collect();
    min_rows
        .into_iter()
        .filter(|&i| {
            let nn = nearest(x, &all, x.row(i), BORDERLINE_M, Some(i));
            let maj = nn.iter().filter(|&&j| y[j] != label).count();
            2 * maj >= nn.len() && maj < nn.len()
        })
        .collect()
}

fn adasyn(x: &Matrix, y: &[u8], rng: &mut Rng) -> (Matrix, Vec<u8>) {
    let (label, min_rows, maj_rows) = minority(y);
    let all: Vec<usize> = (0..x.rows).collect();
    let total = maj_rows.len() - min_rows.len();
    let ratio: Vec<f64> = min_rows
        .iter()
        .map(|&i| {
            let nn = nearest(x, &all, x.row(i), SMOTE_K, Some(i));
            nn.iter().filter(|&&j| y[j] != label).count() as f64 / SMOTE_K as f64
        })
        .collect();
    let sum: f64 = ratio.iter().sum();
    let weights: Vec<f64> = if sum > 0.0 {
        ratio.iter().map(|r| r / sum).collect()
    } else {
        vec![1.0 / min_rows.len() as f64; min_rows.len()]
    };
    // largest-remainder allocation of exactly `total` samples
    let exact: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    let mut out = x.clone();
    let mut oy = y.to_vec();
    for (s, &i) in min_rows.iter().enumerate() {
        let nn = nearest(x, &min_rows, x.row(i), SMOTE_K, Some(i));
        for _ in 0..counts[s] {
            let partner = *nn.choose(rng).expect("minority has neighbours");
            out.push_row(&synthesize(x, i, partner, rng));
            oy.push(label);
        }
    }
    (out, oy)
}

/// Removes both members of every Tomek link (mutual nearest neighbours of opposite class).
fn tomek_links(x: &Matrix, y: &[u8]) -> (Matrix, Vec<u8>) {
    let all: Vec<usize> = (0..x.rows).collect();
    let nn: Vec<usize> = (0..x.rows).map(|i| nearest(x, &all, x.row(i), 1, Some(i))[0]).collect();
    let keep: Vec<usize> = all
        .into_iter()
        .filter(|&i| {
            let j = nn[i];
            !(y[i] != y[j] && nn[j] == i)
        })
        .collect();
    (x.select_rows(&keep), keep.iter().map(|&i| y[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_min: usize, n_maj: usize) -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n_min {
            rows.push(vec![(i as f64 * 0.37).sin() + 2.0, (i as f64 * 0.91).cos() + 2.0]);
            y.push(1);
        }
        for i in 0..n_maj {
            rows.push(vec![(i as f64 * 0.53).sin() - 1.0, (i as f64 * 0.29).cos() - 1.0]);
            y.push(0);
        }
        (Matrix::from_rows(&rows), y)
    }

    fn counts(y: &[u8]) -> (usize, usize) {
        (y.iter().filter(|&&l| l == 1).count(), y.iter().filter(|&&l| l == 0).count())
    }

    #[test]
    fn equalizing_contracts() {
        let (x, y) = blobs(10, 30);
        let mut r = crate::rng::from_seed(1);
        for kind in [Resampler::RandomOver, Resampler::Smote, Resampler::Adasyn] {
            assert_eq!(counts(&resample(&x, &y, kind, &mut r).unwrap().y), (30, 30), "{kind:?}");
        }
        for kind in [Resampler::RandomUnder, Resampler::NearMiss { version: 1 }, Resampler::NearMiss { version: 2 }] {
            assert_eq!(counts(&resample(&x, &y, kind, &mut r).unwrap().y), (10, 10), "{kind:?}");
        }
        let (bx, by) = blobs(20, 20);
        assert_eq!(counts(&resample(&bx, &by, Resampler::RandomOver, &mut r).unwrap().y), (20, 20));
    }

    #[test]
    fn smote_stays_on_segments() {
        let mut rows = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let mut y = vec![1, 1];
        for i in 0..8 {
            rows.push(vec![5.0 + i as f64, -3.0]);
            y.push(0);
        }
        let x = Matrix::from_rows(&rows);
        let mut r = crate::rng::from_seed(3);
        let (sx, sy) = smote(&x, &y, &mut r, None);
        for i in 10..sx.rows {
            assert_eq!(sy[i], 1);
            let p = sx.row(i);
            assert!(p[0] == p[1] && (0.0..=1.0).contains(&p[0]));
        }
    }

    #[test]
    fn small_minority_falls_back() {
        let (x, y) = blobs(4, 12);
        let mut r = crate::rng::from_seed(2);
        let out = resample(&x, &y, Resampler::Smote, &mut r).unwrap();
        assert!(out.fell_back);
        assert_eq!(counts(&out.y), (12, 12));
    }
}
