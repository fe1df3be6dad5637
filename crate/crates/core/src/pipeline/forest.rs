//! Random forest of gini CART trees.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::pipeline::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { positive: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    max_depth: Option<usize>,
    max_features: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize, r: &mut rng::Rng) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { positive: pos as f64 / n.max(1) as f64 });
        if n < 2 || pos == 0 || pos == n || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in sample(r, self.x.cols, self.max_features.min(self.x.cols)).into_iter() {
            let mut vals: Vec<(f64, u8)> = idx.iter().map(|&i| (self.x.get(i, f), self.y[i])).collect();
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for s in 1..n {
                left_pos += usize::from(vals[s - 1].1);
                if vals[s].0 <= vals[s - 1].0 {
                    continue;
                }
                let child = (s as f64 * gini(left_pos, s) + (n - s) as f64 * gini(pos - left_pos, n - s)) / n as f64;
                let gain = parent - child;
                if gain > 1e-12 && best.map_or(true, |b| gain > b.0) {
                    best = Some((gain, f, 0.5 * (vals[s - 1].0 + vals[s].0)));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (l, rr): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        let left = self.grow(l, depth + 1, r);
        let right = self.grow(rr, depth + 1, r);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { positive } => return positive,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[u8], n_trees: usize, max_depth: Option<usize>, seed: u64) -> Self {
        let max_features = ((x.cols as f64).sqrt().floor() as usize).max(1);
        let trees = (0..n_trees)
            .map(|t| {
                let mut r = rng::stream(seed, t as u64);
                let boot: Vec<usize> = (0..x.rows).map(|_| r.gen_range(0..x.rows)).collect();
                let mut b = Builder { x, y, max_depth, max_features, nodes: Vec::new() };
                b.grow(boot, 0, &mut r);
                Tree { nodes: b.nodes }
            })
            .collect();
        Self { trees }
    }

    /// Fraction of trees voting positive; a tied leaf casts half a vote.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows)
            .map(|i| {
                let votes: f64 = self
                    .trees
                    .iter()
                    .map(|t| {
                        let p = t.predict(x.row(i));
                        if p > 0.5 {
                            1.0
                        } else if p < 0.5 {
                            0.0
                        } else {
                            0.5
                        }
                    })
                    .sum();
                votes / self.trees.len().max(1) as f64
            })
            .collect()
    }
}
