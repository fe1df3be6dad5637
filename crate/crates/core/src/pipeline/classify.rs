//! Classifier specifications and their fitted forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::discriminant::{Lda, NaiveBayes, Qda};
use crate::pipeline::forest::Forest;
use crate::pipeline::logistic::Logistic;
use crate::pipeline::svm::{Kernel, Svm};
use crate::pipeline::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierSpec {
    Logistic { c: f64 },
    Svm { c: f64, kernel: Kernel },
    RandomForest { trees: usize, max_depth: usize },
    NaiveBayes,
    Lda { ridge: f64 },
    Qda { ridge: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Logistic(Logistic),
    Svm(Svm),
    RandomForest(Forest),
    NaiveBayes(NaiveBayes),
    Lda(Lda),
    Qda(Qda),
}

impl Classifier {
    /// `seed` drives the forest's per-tree streams.
    pub fn fit(spec: ClassifierSpec, x: &Matrix, y: &[u8], seed: u64) -> Result<Self> {
        let pos = y.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == y.len() {
            return Err(Error::degenerate("classifier needs both classes"));
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::degenerate("non-finite training features"));
        }
        Ok(match spec {
            ClassifierSpec::Logistic { c } => Classifier::Logistic(Logistic::fit(x, y, c)?),
            ClassifierSpec::Svm { c, kernel } => Classifier::Svm(Svm::fit(x, y, c, kernel)?),
            ClassifierSpec::RandomForest { trees, max_depth } => {
                Classifier::RandomForest(Forest::fit(x, y, trees, Some(max_depth), seed))
            }
            ClassifierSpec::NaiveBayes => Classifier::NaiveBayes(NaiveBayes::fit(x, y)?),
            ClassifierSpec::Lda { ridge } => Classifier::Lda(Lda::fit(x, y, ridge)?),
            ClassifierSpec::Qda { ridge } => Classifier::Qda(Qda::fit(x, y, ridge)?),
        })
    }

    /// Positive-class probabilities, clamped into `[0, 1]`.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let p = match self {
            Classifier::Logistic(m) => m.predict_proba(x),
            Classifier::Svm(m) => m.predict_proba(x),
            Classifier::RandomForest(m) => m.predict_proba(x),
            Classifier::NaiveBayes(m) => m.predict_proba(x),
            Classifier::Lda(m) => m.predict_proba(x),
            Classifier::Qda(m) => m.predict_proba(x),
        };
        p.into_iter().map(|v| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) }).collect()
    }
}
