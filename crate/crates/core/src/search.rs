//! Random workflow search scored by inner random-split validation, and the
//! top-k probability-averaging ensemble.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::Confusion;
use crate::model::{FeatureGroup, FeatureTable};
use crate::pipeline::{FittedWorkflow, Matrix, SearchSpace, WorkflowConfig};
use crate::rng;

pub const DEFAULT_BUDGET: usize = 25_000;
pub const DEFAULT_ENSEMBLE: usize = 50;
pub const DEFAULT_INNER_FOLDS: usize = 5;
pub const DEFAULT_INNER_VALIDATION: f64 = 0.15;
pub const THRESHOLD: f64 = 0.5;
pub const MODEL_MAGIC: &[u8; 8] = b"RADAUTOM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub space: SearchSpace,
    pub budget: usize,
    pub ensemble: usize,
    pub inner_folds: usize,
    pub inner_validation: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            space: SearchSpace::default(),
            budget: DEFAULT_BUDGET,
            ensemble: DEFAULT_ENSEMBLE,
            inner_folds: DEFAULT_INNER_FOLDS,
            inner_validation: DEFAULT_INNER_VALIDATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWorkflow {
    pub config: WorkflowConfig,
    /// `-inf` when degenerate.
    pub mean_f1: f64,
    pub fold_f1: Vec<f64>,
    pub degenerate: bool,
}

/// Training features and labels with their column contract.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub names: Vec<String>,
    pub groups: Vec<FeatureGroup>,
}

impl TrainingData {
    pub fn from_table(table: &FeatureTable, labels: &[u8]) -> Result<Self> {
        if labels.len() != table.n_rows() {
            return Err(Error::invalid("one label per table row is required"));
        }
        Ok(Self {
            x: Matrix::new(table.n_rows(), table.n_cols(), table.values().to_vec()),
            y: labels.to_vec(),
            names: table.names().to_vec(),
            groups: table.groups().to_vec(),
        })
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            names: self.names.clone(),
            groups: self.groups.clone(),
        }
    }
}

pub fn sample_workflows(space: &SearchSpace, n: usize, seed: u64) -> Result<Vec<WorkflowConfig>> {
    if n == 0 {
        return Err(Error::invalid("workflow budget must be at least 1"));
    }
    space.validate()?;
    Ok((0..n).map(|i| space.sample(seed, i)).collect())
}

/// Validation counts per class: the floor of the proportional share, at least one.
fn inner_counts(sizes: [usize; 2], fraction: f64) -> [usize; 2] {
    sizes.map(|n| ((fraction * n as f64).floor() as usize).clamp(1, n.saturating_sub(1)))
}

/// Stratified `(train, validation)` row splits shared by every config.
pub fn inner_splits(y: &[u8], folds: usize, fraction: f64, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if !(fraction > 0.0 && fraction < 1.0) || folds == 0 {
        return Err(Error::invalid("inner validation needs folds ≥ 1 and a fraction in (0, 1)"));
    }
    let classes: [Vec<usize>; 2] = [0u8, 1].map(|c| (0..y.len()).filter(|&i| y[i] == c).collect());
    if classes.iter().any(|c| c.len() < 2) {
        return Err(Error::invalid("inner validation needs two patients per class"));
    }
    let counts = inner_counts([classes[0].len(), classes[1].len()], fraction);
    Ok((0..folds)
        .map(|f| {
            let mut r = rng::stream(seed, f as u64);
            let (mut train, mut val) = (Vec::new(), Vec::new());
            for (members, &k) in classes.iter().zip(&counts) {
                let mut m = members.clone();
                m.shuffle(&mut r);
                val.extend_from_slice(&m[..k]);
                train.extend_from_slice(&m[k..]);
            }
            train.sort_unstable();
            val.sort_unstable();
            (train, val)
        })
        .collect())
}

pub fn score_workflow(config: &WorkflowConfig, data: &TrainingData, splits: &[(Vec<usize>, Vec<usize>)]) -> ScoredWorkflow {
    let mut fold_f1 = Vec::with_capacity(splits.len());
    for (train, val) in splits {
        let t = data.subset(train);
        let v = data.subset(val);
        let f1 = FittedWorkflow::fit(config, &t.x, &t.y, &t.groups)
            .and_then(|w| w.predict_proba(&v.x))
            .map(|p| Confusion::at(&p, &v.y, THRESHOLD).f1());
        match f1 {
            Ok(f) => fold_f1.push(f),
            Err(e) => {
                log::debug!("workflow {} degenerate: {e}", config.index);
                return ScoredWorkflow { config: config.clone(), mean_f1: f64::NEG_INFINITY, fold_f1, degenerate: true };
            }
        }
    }
    let mean_f1 = fold_f1.iter().sum::<f64>() / fold_f1.len() as f64;
    ScoredWorkflow { config: config.clone(), mean_f1, fold_f1, degenerate: false }
}

/// Scores `settings.budget` sampled configs in parallel; output is in config order.
pub fn run_search(data: &TrainingData, settings: &SearchSettings, seed: u64) -> Result<Vec<ScoredWorkflow>> {
    let configs = sample_workflows(&settings.space, settings.budget, rng::derive(seed, 0))?;
    let splits = inner_splits(&data.y, settings.inner_folds, settings.inner_validation, rng::derive(seed, 1))?;
    Ok(configs.par_iter().map(|c| score_workflow(c, data, &splits)).collect())
}

/// Non-degenerate positions ordered by mean F1 descending, then config index.
pub fn rank(scored: &[ScoredWorkflow]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).filter(|&i| !scored[i].degenerate).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .mean_f1
            .total_cmp(&scored[a].mean_f1)
            .then(scored[a].config.index.cmp(&scored[b].config.index))
    });
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub feature_names: Vec<String>,
    pub feature_groups: Vec<FeatureGroup>,
    pub positive_class: String,
    pub requested: usize,
    /// JSON echo of the configuration that produced the model.
    pub run_config: String,
    pub members: Vec<FittedWorkflow>,
    /// Validation F1 of each member, aligned with `members`.
    pub member_scores: Vec<f64>,
}

/// Retrains the best `k` configs on all of `data`. A config that turns
/// degenerate on the full set is skipped in favour of the next ranked one.
pub fn build_ensemble(scored: &[ScoredWorkflow], k: usize, data: &TrainingData) -> Result<EnsembleModel> {
    if k == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let order = rank(scored);
    if order.is_empty() {
        return Err(Error::degenerate("every sampled workflow is degenerate"));
    }
    let mut members = Vec::new();
    let mut member_scores = Vec::new();
    let mut at = 0;
    while members.len() < k && at < order.len() {
        let end = (at + (k - members.len())).min(order.len());
        let fitted: Vec<Result<FittedWorkflow>> = order[at..end]
            .par_iter()
            .map(|&i| FittedWorkflow::fit(&scored[i].config, &data.x, &data.y, &data.groups))
            .collect();
        for (&i, f) in order[at..end].iter().zip(fitted) {
            match f {
                Ok(w) => {
                    members.push(w);
                    member_scores.push(scored[i].mean_f1);
                }
                Err(e) => log::debug!("config {} failed on the full training set: {e}", scored[i].config.index),
            }
        }
        at = end;
    }
    if members.is_empty() {
        return Err(Error::degenerate("no ranked workflow could be retrained"));
    }
    if members.len() < k {
        log::info!("ensemble holds {} of {} requested members", members.len(), k);
    }
    Ok(EnsembleModel {
        feature_names: data.names.clone(),
        feature_groups: data.groups.clone(),
        positive_class: "1".into(),
        requested: k,
        run_config: String::new(),
        members,
        member_scores,
    })
}

impl EnsembleModel {
    /// Mean of member probabilities for rows of `x`, whose columns follow `names`.
    pub fn predict(&self, x: &Matrix, names: &[String]) -> Result<Vec<f64>> {
        if names != self.feature_names.as_slice() {
            let missing = self.feature_names.iter().find(|n| !names.contains(n));
            return Err(Error::invalid(match missing {
                Some(m) => format!("feature `{m}` required by the model is missing"),
                None => "feature columns differ from the model's contract".into(),
            }));
        }
        let mut sum = vec![0.0; x.rows];
        for m in &self.members {
            for (s, p) in sum.iter_mut().zip(m.predict_proba(x)?) {
                *s += p;
            }
        }
        Ok(sum.into_iter().map(|s| s / self.members.len() as f64).collect())
    }

    /// Reorders `table` columns to the model contract and predicts.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let t = table.select_names(&self.feature_names)?;
        self.predict(&Matrix::new(t.n_rows(), t.n_cols(), t.values().to_vec()), t.names())
    }

    pub fn fingerprint(&self) -> String {
        crate::digest_bytes(&bincode::serialize(self).expect("serializable ensemble"))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MODEL_MAGIC.to_vec();
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend(bincode::serialize(self).expect("serializable ensemble"));
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MODEL_MAGIC {
            return Err(Error::Format { path: path.into(), msg: "not a model file".into() });
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("four bytes"));
        if version != MODEL_VERSION {
            return Err(Error::Schema { expected: MODEL_VERSION.to_string(), found: version.to_string() });
        }
        bincode::deserialize(&bytes[12..]).map_err(|e| Error::Format { path: path.into(), msg: e.to_string() })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// Full search followed by ensemble construction.
pub fn train(data: &TrainingData, settings: &SearchSettings, seed: u64) -> Result<(EnsembleModel, Vec<ScoredWorkflow>)> {
    let scored = run_search(data, settings, seed)?;
    let model = build_ensemble(&scored, settings.ensemble, data)?;
    Ok((model, scored))
}
