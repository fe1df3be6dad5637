//! A sampled workflow fitted end to end on training rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureGroup;
use crate::pipeline::classify::Classifier;
use crate::pipeline::config::WorkflowConfig;
use crate::pipeline::impute::Imputer;
use crate::pipeline::resample::resample;
use crate::pipeline::scale::RobustZScore;
use crate::pipeline::select::{groupwise_select, univariate_select, variance_threshold, Pca};
use crate::pipeline::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedWorkflow {
    pub config: WorkflowConfig,
    pub n_inputs: usize,
    /// Input columns kept by the group flags.
    pub group_columns: Vec<usize>,
    pub scaler: Option<RobustZScore>,
    pub imputer: Imputer,
    /// Columns (within the group subset) kept by the variance and univariate screens.
    pub kept: Vec<usize>,
    pub pca: Option<Pca>,
    pub classifier: Classifier,
    /// Set when the resampler fell back to random over-sampling.
    pub resample_fallback: bool,
}

fn finite_or_nan(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    out.data.iter_mut().filter(|v| !v.is_finite()).for_each(|v| *v = f64::NAN);
    out
}

impl FittedWorkflow {
    /// Fits on `x` only. Degenerate configurations return [`Error::Degenerate`].
    pub fn fit(config: &WorkflowConfig, x: &Matrix, y: &[u8], groups: &[FeatureGroup]) -> Result<Self> {
        if groups.len() != x.cols || y.len() != x.rows {
            return Err(Error::invalid("workflow input shape mismatch"));
        }
        let group_columns = groupwise_select(groups, &config.groups)?;
        let mut z = finite_or_nan(&x.select_columns(&group_columns));
        let scaler = config.scaler.then(|| RobustZScore::fit(&z));
        if let Some(s) = &scaler {
            z = s.apply(&z);
        }
        let imputer = Imputer::fit(&z, config.imputer);
        let z = imputer.apply(&z);
        let var_cols = variance_threshold(&z)?;
        let zv = z.select_columns(&var_cols);
        let kept: Vec<usize> = match config.univariate {
            Some(p) => univariate_select(&zv, y, p)?.into_iter().map(|j| var_cols[j]).collect(),
            None => var_cols,
        };
        let mut z = z.select_columns(&kept);
        let pca = match config.pca {
            Some(mode) => {
                let p = Pca::fit(&z, mode)?;
                z = p.transform(&z);
                Some(p)
            }
            None => None,
        };
        let mut r = rng::stream(config.stream, 0);
        let res = resample(&z, y, config.resampler, &mut r)?;
        let classifier = Classifier::fit(config.classifier, &res.x, &res.y, rng::derive(config.stream, 1))?;
        Ok(Self {
            config: config.clone(),
            n_inputs: x.cols,
            group_columns,
            scaler,
            imputer,
            kept,
            pca,
            classifier,
            resample_fallback: res.fell_back,
        })
    }

    /// Classifier-ready features for `x`; reads nothing but the stored parameters.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols != self.n_inputs {
            return Err(Error::invalid(format!("expected {} input columns, got {}", self.n_inputs, x.cols)));
        }
        let mut z = finite_or_nan(&x.select_columns(&self.group_columns));
        if let Some(s) = &self.scaler {
            z = s.apply(&z);
        }
        let z = self.imputer.apply(&z).select_columns(&self.kept);
        Ok(match &self.pca {
            Some(p) => p.transform(&z),
            None => z,
        })
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.classifier.predict_proba(&self.transform(x)?))
    }

    pub fn fingerprint(&self) -> String {
        crate::digest_bytes(&bincode::serialize(self).expect("serializable workflow"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::SearchSpace;
    use rand::Rng as _;

    fn blobs(n: usize, d: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut r = rng::from_seed(seed);
        let mut m = Matrix::zeros(n, d);
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        for i in 0..n {
            for j in 0..d {
                let shift = if j < 3 { 2.0 * f64::from(y[i]) } else { 0.0 };
                m.set(i, j, r.gen_range(-1.0..1.0) + shift);
            }
        }
        (m, y)
    }

    #[test]
    fn sampled_workflows_fit_or_report_degenerate() {
        let (x, y) = blobs(40, 20, 1);
        let groups = vec![FeatureGroup::Histogram; 10].into_iter().chain(vec![FeatureGroup::Glcm; 10]).collect::<Vec<_>>();
        let space = SearchSpace::default();
        let (test, _) = blobs(10, 20, 2);
        let mut ok = 0;
        for i in 0..120 {
            let c = space.sample(3, i);
            match FittedWorkflow::fit(&c, &x, &y, &groups) {
                Ok(w) => {
                    ok += 1;
                    let before = w.fingerprint();
                    let p = w.predict_proba(&test).unwrap();
                    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)), "{c:?}");
                    assert_eq!(before, w.fingerprint());
                    assert_eq!(w, FittedWorkflow::fit(&c, &x, &y, &groups).unwrap());
                }
                Err(Error::Degenerate(_)) => {}
                Err(e) => panic!("{c:?}: {e}"),
            }
        }
        assert!(ok > 40, "{ok}");
    }

    #[test]
    fn all_groups_off_is_degenerate() {
        let (x, y) = blobs(20, 4, 1);
        let mut c = SearchSpace::default().sample(1, 0);
        c.groups = vec![FeatureGroup::Shape];
        let r = FittedWorkflow::fit(&c, &x, &y, &[FeatureGroup::Histogram; 4]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }
}
