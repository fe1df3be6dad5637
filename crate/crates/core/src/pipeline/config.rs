//! Search space description and sampled workflow configurations.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureGroup;
use crate::pipeline::classify::ClassifierSpec;
use crate::pipeline::impute::ImputerKind;
use crate::pipeline::resample::Resampler;
use crate::pipeline::select::PcaMode;
use crate::pipeline::svm::Kernel;
use crate::rng::{self, Rng};

pub const SPACE_VERSION: &str = "radauto-space/1";

/// Inclusive range; `log` samples uniformly in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub log: bool,
}

impl Range {
    pub const fn linear(min: f64, max: f64) -> Self {
        Self { min, max, log: false }
    }

    pub const fn log(min: f64, max: f64) -> Self {
        Self { min, max, log: true }
    }

    fn check(&self, what: &str) -> Result<()> {
        let ok = self.min.is_finite() && self.max.is_finite() && self.min <= self.max && (!self.log || self.min > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad range for {what}: [{}, {}]", self.min, self.max)))
        }
    }

    fn sample(&self, r: &mut Rng) -> f64 {
        if self.min == self.max {
            return self.min;
        }
        if self.log {
            r.gen_range(self.min.ln()..=self.max.ln()).exp().clamp(self.min, self.max)
        } else {
            r.gen_range(self.min..=self.max)
        }
    }

    fn sample_int(&self, r: &mut Rng) -> usize {
        let (lo, hi) = (self.min.ceil() as usize, self.max.floor() as usize);
        r.gen_range(lo..=hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// A named option with a relative sampling weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weighted<T> {
    pub weight: f64,
    pub option: T,
}

fn w<T>(weight: f64, option: T) -> Weighted<T> {
    Weighted { weight, option }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputerChoice {
    Mean,
    Median,
    MostFrequent,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PcaChoice {
    Off,
    Variance95,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierChoice {
    Logistic,
    Svm,
    RandomForest,
    NaiveBayes,
    Lda,
    Qda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub version: String,
    pub imputers: Vec<Weighted<ImputerChoice>>,
    pub knn_k: Range,
    pub scaler_probability: f64,
    pub group_probability: f64,
    pub univariate_probability: f64,
    pub univariate_p: Range,
    pub pca: Vec<Weighted<PcaChoice>>,
    pub pca_k: Range,
    pub resamplers: Vec<Weighted<Resampler>>,
    pub classifiers: Vec<Weighted<ClassifierChoice>>,
    pub logistic_c: Range,
    pub svm_kernels: Vec<Weighted<KernelChoice>>,
    pub svm_c: Range,
    pub svm_gamma: Range,
    pub forest_trees: Range,
    pub forest_depth: Range,
    pub discriminant_ridge: Range,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            version: SPACE_VERSION.into(),
            imputers: vec![
                w(1.0, ImputerChoice::Mean),
                w(1.0, ImputerChoice::Median),
                w(1.0, ImputerChoice::MostFrequent),
                w(1.0, ImputerChoice::Knn),
            ],
            knn_k: Range::linear(2.0, 7.0),
            scaler_probability: 0.5,
            group_probability: 0.5,
            univariate_probability: 0.5,
            univariate_p: Range::linear(0.01, 0.10),
            pca: vec![w(1.0, PcaChoice::Off), w(1.0, PcaChoice::Variance95), w(1.0, PcaChoice::Fixed)],
            pca_k: Range::linear(10.0, 50.0),
            resamplers: vec![
                w(1.0, Resampler::None),
                w(1.0, Resampler::RandomOver),
                w(1.0, Resampler::RandomUnder),
                w(1.0, Resampler::NearMiss { version: 1 }),
                w(1.0, Resampler::NeighbourhoodCleaning),
                w(1.0, Resampler::Adasyn),
                w(1.0, Resampler::Smote),
                w(1.0, Resampler::SmoteBorderline),
                w(1.0, Resampler::SmoteTomek),
                w(1.0, Resampler::SmoteEnn),
            ],
            classifiers: vec![
                w(1.0, ClassifierChoice::Logistic),
                w(1.0, ClassifierChoice::Svm),
                w(1.0, ClassifierChoice::RandomForest),
                w(1.0, ClassifierChoice::NaiveBayes),
                w(1.0, ClassifierChoice::Lda),
                w(1.0, ClassifierChoice::Qda),
            ],
            logistic_c: Range::log(1e-3, 1e3),
            svm_kernels: vec![w(1.0, KernelChoice::Linear), w(1.0, KernelChoice::Rbf)],
            svm_c: Range::log(1e-2, 1e3),
            svm_gamma: Range::log(1e-4, 1e1),
            forest_trees: Range::linear(10.0, 200.0),
            forest_depth: Range::linear(2.0, 20.0),
            discriminant_ridge: Range::linear(0.0, 1.0),
        }
    }
}

fn pick<T: Clone>(options: &[Weighted<T>], r: &mut Rng) -> T {
    let dist = WeightedIndex::new(options.iter().map(|o| o.weight)).expect("validated weights");
    options[dist.sample(r)].option.clone()
}

fn check_weights<T>(options: &[Weighted<T>], what: &str) -> Result<()> {
    if options.iter().any(|o| !(o.weight >= 0.0) || !o.weight.is_finite()) || !options.iter().any(|o| o.weight > 0.0) {
        return Err(Error::invalid(format!("search space has no selectable {what}")));
    }
    Ok(())
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} probability {p} outside [0, 1]")))
    }
}

fn check_int(r: &Range, lo: f64, what: &str) -> Result<()> {
    r.check(what)?;
    if r.min < lo || r.min.ceil() > r.max.floor() {
        return Err(Error::invalid(format!("{what} range holds no integer ≥ {lo}")));
    }
    Ok(())
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.version != SPACE_VERSION {
            return Err(Error::Schema { expected: SPACE_VERSION.into(), found: self.version.clone() });
        }
        check_weights(&self.imputers, "imputer")?;
        check_weights(&self.pca, "PCA mode")?;
        check_weights(&self.resamplers, "resampler")?;
        check_weights(&self.classifiers, "classifier")?;
        check_weights(&self.svm_kernels, "SVM kernel")?;
        check_probability(self.scaler_probability, "scaler")?;
        check_probability(self.group_probability, "group")?;
        check_probability(self.univariate_probability, "univariate")?;
        check_int(&self.knn_k, 1.0, "knn k")?;
        check_int(&self.pca_k, 1.0, "PCA k")?;
        check_int(&self.forest_trees, 1.0, "forest trees")?;
        check_int(&self.forest_depth, 1.0, "forest depth")?;
        self.univariate_p.check("univariate p")?;
        self.logistic_c.check("logistic C")?;
        self.svm_c.check("SVM C")?;
        self.svm_gamma.check("SVM gamma")?;
        self.discriminant_ridge.check("discriminant ridge")?;
        if self.logistic_c.min <= 0.0 || self.svm_c.min <= 0.0 || self.svm_gamma.min <= 0.0 || self.discriminant_ridge.min < 0.0 {
            return Err(Error::invalid("regularization ranges must be positive"));
        }
        for r in &self.resamplers {
            if let Resampler::NearMiss { version } = r.option {
                if !(1..=3).contains(&version) {
                    return Err(Error::invalid(format!("near-miss version {version}")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("version").and_then(|s| s.as_str()).unwrap_or("").to_string();
        if found != SPACE_VERSION {
            return Err(Error::Schema { expected: SPACE_VERSION.into(), found });
        }
        let space: SearchSpace = serde_json::from_value(v)?;
        space.validate()?;
        Ok(space)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable space")
    }

    /// Config `index` drawn from its own stream of `seed`.
    pub fn sample(&self, seed: u64, index: usize) -> WorkflowConfig {
        let mut r = rng::stream(seed, index as u64);
        let imputer = match pick(&self.imputers, &mut r) {
            ImputerChoice::Mean => ImputerKind::Mean,
            ImputerChoice::Median => ImputerKind::Median,
            ImputerChoice::MostFrequent => ImputerKind::MostFrequent,
            ImputerChoice::Knn => ImputerKind::Knn { k: self.knn_k.sample_int(&mut r) },
        };
        let scaler = r.gen_bool(self.scaler_probability);
        let groups: Vec<FeatureGroup> =
            FeatureGroup::TAGS.iter().copied().filter(|_| r.gen_bool(self.group_probability)).collect();
        let univariate = r.gen_bool(self.univariate_probability).then(|| self.univariate_p.sample(&mut r));
        let pca = match pick(&self.pca, &mut r) {
            PcaChoice::Off => None,
            PcaChoice::Variance95 => Some(PcaMode::Variance95),
            PcaChoice::Fixed => Some(PcaMode::Fixed { k: self.pca_k.sample_int(&mut r) }),
        };
        let resampler = pick(&self.resamplers, &mut r);
        let classifier = match pick(&self.classifiers, &mut r) {
            ClassifierChoice::Logistic => ClassifierSpec::Logistic { c: self.logistic_c.sample(&mut r) },
            ClassifierChoice::Svm => {
                let kernel = match pick(&self.svm_kernels, &mut r) {
                    KernelChoice::Linear => Kernel::Linear,
                    KernelChoice::Rbf => Kernel::Rbf { gamma: self.svm_gamma.sample(&mut r) },
                };
                ClassifierSpec::Svm { c: self.svm_c.sample(&mut r), kernel }
            }
            ClassifierChoice::RandomForest => ClassifierSpec::RandomForest {
                trees: self.forest_trees.sample_int(&mut r),
                max_depth: self.forest_depth.sample_int(&mut r),
            },
            ClassifierChoice::NaiveBayes => ClassifierSpec::NaiveBayes,
            ClassifierChoice::Lda => ClassifierSpec::Lda { ridge: self.discriminant_ridge.sample(&mut r) },
            ClassifierChoice::Qda => ClassifierSpec::Qda { ridge: self.discriminant_ridge.sample(&mut r) },
        };
        WorkflowConfig {
            index,
            stream: rng::derive_path(seed, &[index as u64, 1]),
            imputer,
            scaler,
            groups,
            univariate,
            pca,
            resampler,
            classifier,
        }
    }

    /// Whether every field of `c` lies inside this space.
    pub fn contains(&self, c: &WorkflowConfig) -> bool {
        let imputer_ok = match c.imputer {
            ImputerKind::Knn { k } => self.knn_k.contains(k as f64),
            _ => true,
        };
        let univariate_ok = c.univariate.map_or(true, |p| self.univariate_p.contains(p));
        let pca_ok = match c.pca {
            Some(PcaMode::Fixed { k }) => self.pca_k.contains(k as f64),
            _ => true,
        };
        let clf_ok = match c.classifier {
            ClassifierSpec::Logistic { c } => self.logistic_c.contains(c),
            ClassifierSpec::Svm { c, kernel } => {
                self.svm_c.contains(c)
                    && match kernel {
                        Kernel::Linear => true,
                        Kernel::Rbf { gamma } => self.svm_gamma.contains(gamma),
                    }
            }
            ClassifierSpec::RandomForest { trees, max_depth } => {
                self.forest_trees.contains(trees as f64) && self.forest_depth.contains(max_depth as f64)
            }
            ClassifierSpec::NaiveBayes => true,
            ClassifierSpec::Lda { ridge } | ClassifierSpec::Qda { ridge } => self.discriminant_ridge.contains(ridge),
        };
        imputer_ok && univariate_ok && pca_ok && clf_ok
    }
}

/// One sampled workflow. Pure function of `(space, seed, index)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowConfig {
    pub index: usize,
    /// Seed for the resampler and forest streams.
    pub stream: u64,
    pub imputer: ImputerKind,
    pub scaler: bool,
    /// Enabled feature groups.
    pub groups: Vec<FeatureGroup>,
    /// Mann-Whitney p threshold when univariate selection is on.
    pub univariate: Option<f64>,
    pub pca: Option<PcaMode>,
    pub resampler: Resampler,
    pub classifier: ClassifierSpec,
}

impl WorkflowConfig {
    pub fn fingerprint(&self) -> String {
        crate::digest_bytes(&serde_json::to_vec(self).expect("serializable config"))
    }
}
