//! Outer cross-validation harness and the evaluation report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::metrics::{auc, confusion_metrics, corrected_resampled_ci, format_interval, Interval};
use crate::evaluate::roc::{resample, roc_band, roc_curve, RocBand};
use crate::evaluate::split::{leave_one_out_plan, random_split_plan, SplitMode, SplitPlan};
use crate::evaluate::typicality::{rank_typicality, PatientCount, Typicality};
use crate::harmonize::BatchModel;
use crate::search::{self, EnsembleModel, SearchSettings, TrainingData, THRESHOLD};
use crate::rng;

pub const REPORT_SCHEMA: &str = "radauto-report/1";
pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub search: SearchSettings,
    pub iterations: usize,
    pub test_fraction: f64,
    pub mode: SplitMode,
    pub seed: u64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            search: SearchSettings::default(),
            iterations: DEFAULT_ITERATIONS,
            test_fraction: DEFAULT_TEST_FRACTION,
            mode: SplitMode::RandomSplit,
            seed: 0,
        }
    }
}

pub fn make_plan(labels: &[u8], settings: &ExperimentSettings) -> Result<SplitPlan> {
    match settings.mode {
        SplitMode::RandomSplit => random_split_plan(labels, settings.iterations, settings.test_fraction, rng::derive(settings.seed, 0)),
        SplitMode::LeaveOneOut => Ok(leave_one_out_plan(labels.len())),
    }
}

/// Everything fitted on one outer training part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedIteration {
    /// ComBat model and the columns it covers.
    pub combat: Option<(BatchModel, Vec<usize>)>,
    pub ensemble: EnsembleModel,
}

impl FittedIteration {
    pub fn fingerprint(&self) -> String {
        crate::digest_bytes(&bincode::serialize(self).expect("serializable iteration"))
    }
}

fn harmonize(data: &mut TrainingData, combat: &(BatchModel, Vec<usize>), batches: &[String]) -> Result<()> {
    let (model, cols) = combat;
    let sub = data.x.select_columns(cols);
    let out = model.apply(&sub.data, cols.len(), batches)?;
    for i in 0..data.x.rows {
        for (k, &j) in cols.iter().enumerate() {
            data.x.set(i, j, out[i * cols.len() + k]);
        }
    }
    Ok(())
}

/// Fits ComBat (when `batches` is given) and the workflow ensemble on the
/// `train` rows. Other rows are never read.
pub fn fit_iteration(
    data: &TrainingData,
    batches: Option<&[String]>,
    train: &[usize],
    search: &SearchSettings,
    seed: u64,
) -> Result<FittedIteration> {
    let mut part = data.subset(train);
    let combat = match batches {
        Some(b) => {
            let tb: Vec<String> = train.iter().map(|&i| b[i].clone()).collect();
            let cols: Vec<usize> = (0..part.x.cols)
                .filter(|&j| (0..part.x.rows).all(|i| part.x.get(i, j).is_finite()))
                .collect();
            let sub = part.x.select_columns(&cols);
            let model = BatchModel::fit(&sub.data, cols.len(), &tb)?;
            let c = (model, cols);
            harmonize(&mut part, &c, &tb)?;
            Some(c)
        }
        None => None,
    };
    let (ensemble, _) = search::train(&part, search, seed)?;
    Ok(FittedIteration { combat, ensemble })
}

pub fn predict_iteration(fitted: &FittedIteration, data: &TrainingData, batches: Option<&[String]>, rows: &[usize]) -> Result<Vec<f64>> {
    let mut part = data.subset(rows);
    if let Some(c) = &fitted.combat {
        let b = batches.ok_or_else(|| Error::invalid("harmonized model needs batch labels"))?;
        let tb: Vec<String> = rows.iter().map(|&i| b[i].clone()).collect();
        harmonize(&mut part, c, &tb)?;
    }
    fitted.ensemble.predict(&part.x, &part.names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Absent when the test part holds a single class.
    pub auc: Option<f64>,
    pub bca: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub ensemble_size: usize,
    pub model_fingerprint: String,
    pub test_ids: Vec<String>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub auc: Interval,
    pub bca: Interval,
    pub sensitivity: Interval,
    pub specificity: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientEntry {
    pub id: String,
    pub label: u8,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: String,
    /// Echo of the resolved command or caller configuration.
    pub run_config: serde_json::Value,
    pub settings: ExperimentSettings,
    pub iterations: Vec<IterationRecord>,
    pub summary: Summary,
    pub roc: RocBand,
    pub patients: Vec<PatientEntry>,
    pub typicality: Typicality,
    /// sha256 of the report with `digest` and `created_unix` blanked.
    pub digest: String,
    pub created_unix: u64,
}

impl EvaluationReport {
    pub fn compute_digest(&self) -> String {
        let mut c = self.clone();
        c.digest = String::new();
        c.created_unix = 0;
        crate::digest_bytes(&serde_json::to_vec(&c).expect("serializable report"))
    }

    pub fn verify_digest(&self) -> bool {
        self.digest == self.compute_digest()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("schema").and_then(|s| s.as_str()).unwrap_or("").to_string();
        if found != REPORT_SCHEMA {
            return Err(Error::Schema { expected: REPORT_SCHEMA.into(), found });
        }
        Ok(serde_json::from_value(v)?)
    }

    /// Mean ROC curve as `fpr,tpr,lower,upper` CSV lines.
    pub fn roc_csv(&self) -> String {
        let mut s = String::from("fpr,tpr,lower,upper\n");
        for (f, t) in self.roc.fpr.iter().zip(&self.roc.mean_tpr) {
            let lo = (t - self.roc.half_width).max(0.0);
            let hi = (t + self.roc.half_width).min(1.0);
            s.push_str(&format!("{f},{t},{lo},{hi}\n"));
        }
        s
    }
}

fn point(v: f64) -> Interval {
    Interval { mean: v, lower: v, upper: v }
}

fn interval(values: &[f64], n_train: usize, n_test: usize) -> Result<Interval> {
    if values.len() < 2 {
        return Ok(point(values.first().copied().unwrap_or(f64::NAN)));
    }
    corrected_resampled_ci(values, n_train, n_test, CI_LEVEL)
}

/// Runs every outer iteration of `plan`. `batches`, when given, turns on
/// training-only ComBat per iteration.
pub fn run_experiment(
    ids: &[String],
    data: &TrainingData,
    batches: Option<&[String]>,
    plan: &SplitPlan,
    settings: &ExperimentSettings,
    run_config: serde_json::Value,
) -> Result<EvaluationReport> {
    if ids.len() != data.x.rows {
        return Err(Error::invalid("one id per data row is required"));
    }
    if plan.splits.is_empty() {
        return Err(Error::invalid("split plan has no iterations"));
    }
    let results: Vec<Result<(Vec<f64>, FittedIteration)>> = plan
        .splits
        .par_iter()
        .enumerate()
        .map(|(it, s)| {
            let seed = rng::derive_path(settings.seed, &[1, it as u64]);
            let fitted = fit_iteration(data, batches, &s.train, &settings.search, seed)?;
            let p = predict_iteration(&fitted, data, batches, &s.test)?;
            Ok((p, fitted))
        })
        .collect();
    let mut records = Vec::with_capacity(plan.splits.len());
    let mut counts = vec![PatientCount { correct: 0, total: 0 }; ids.len()];
    for (it, (r, s)) in results.into_iter().zip(&plan.splits).enumerate() {
        let (p, fitted) = r.map_err(|e| Error::Iteration { iteration: it, source: Box::new(e) })?;
        let y: Vec<u8> = s.test.iter().map(|&i| data.y[i]).collect();
        for ((&i, &pi), &yi) in s.test.iter().zip(&p).zip(&y) {
            counts[i].total += 1;
            counts[i].correct += usize::from((pi >= THRESHOLD) == (yi == 1));
        }
        let (se, sp, b) = confusion_metrics(&p, &y, THRESHOLD);
        records.push(IterationRecord {
            iteration: it,
            n_train: s.train.len(),
            n_test: s.test.len(),
            auc: auc(&p, &y).ok(),
            bca: b,
            sensitivity: se,
            specificity: sp,
            ensemble_size: fitted.ensemble.members.len(),
            model_fingerprint: fitted.fingerprint(),
            test_ids: s.test.iter().map(|&i| ids[i].clone()).collect(),
            probabilities: p,
        });
    }
    let (summary, roc) = match plan.mode {
        SplitMode::RandomSplit => {
            let n_train = records[0].n_train;
            let n_test = records[0].n_test;
            let col = |f: &dyn Fn(&IterationRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
            let aucs: Vec<f64> = records.iter().filter_map(|r| r.auc).collect();
            let summary = Summary {
                auc: interval(&aucs, n_train, n_test)?,
                bca: interval(&col(&|r| r.bca), n_train, n_test)?,
                sensitivity: interval(&col(&|r| r.sensitivity), n_train, n_test)?,
                specificity: interval(&col(&|r| r.specificity), n_train, n_test)?,
            };
            let curves = plan
                .splits
                .iter()
                .zip(&records)
                .filter(|(_, r)| r.auc.is_some())
                .map(|(s, r)| {
                    let y: Vec<u8> = s.test.iter().map(|&i| data.y[i]).collect();
                    roc_curve(&r.probabilities, &y).map(|c| resample(&c))
                })
                .collect::<Result<Vec<_>>>()?;
            let roc = if curves.len() >= 2 {
                roc_band(&curves, CI_LEVEL)?
            } else {
                single_band(curves.first())
            };
            (summary, roc)
        }
        SplitMode::LeaveOneOut => {
            let mut p = Vec::new();
            let mut y = Vec::new();
            for (s, r) in plan.splits.iter().zip(&records) {
                p.extend_from_slice(&r.probabilities);
                y.extend(s.test.iter().map(|&i| data.y[i]));
            }
            let (se, sp, b) = confusion_metrics(&p, &y, THRESHOLD);
            let summary = Summary { auc: point(auc(&p, &y)?), bca: point(b), sensitivity: point(se), specificity: point(sp) };
            let curve = resample(&roc_curve(&p, &y)?);
            (summary, single_band(Some(&curve)))
        }
    };
    let patients: Vec<PatientEntry> = ids
        .iter()
        .zip(&counts)
        .zip(&data.y)
        .map(|((id, c), &label)| PatientEntry { id: id.clone(), label, correct: c.correct, total: c.total })
        .collect();
    let typicality = rank_typicality(&ids.iter().cloned().zip(counts).collect::<Vec<_>>());
    let mut report = EvaluationReport {
        schema: REPORT_SCHEMA.into(),
        run_config,
        settings: settings.clone(),
        iterations: records,
        summary,
        roc,
        patients,
        typicality,
        digest: String::new(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    report.digest = report.compute_digest();
    Ok(report)
}

fn single_band(curve: Option<&Vec<f64>>) -> RocBand {
    let fpr = crate::evaluate::roc::fpr_grid();
    let mean_tpr = curve.cloned().unwrap_or_else(|| vec![f64::NAN; fpr.len()]);
    RocBand { fpr, mean_tpr, half_width: 0.0 }
}

/// Human-readable table with unit-interval CI markers.
pub fn render_report(report: &EvaluationReport) -> String {
    let s = &report.summary;
    let mut out = String::new();
    out.push_str(&format!(
        "{} iterations ({:?}), seed {}\n\n",
        report.iterations.len(),
        report.settings.mode,
        report.settings.seed
    ));
    out.push_str(&format!("{:<14}{}\n", "Metric", "Mean [95% CI]"));
    for (name, ci) in [("AUC", &s.auc), ("BCA", &s.bca), ("Sensitivity", &s.sensitivity), ("Specificity", &s.specificity)] {
        out.push_str(&format!("{:<14}{}\n", name, format_interval(ci)));
    }
    out.push_str(&format!("\nROC band half-width: {:.3}\n", report.roc.half_width));
    let t = &report.typicality;
    out.push_str(&format!("Typical patients: {}\n", t.typical.len()));
    out.push_str(&format!("Atypical patients: {}\n", t.atypical.len()));
    let amb: Vec<String> = t.ambiguous.iter().map(|(id, f)| format!("{id} ({f:.2})")).collect();
    out.push_str(&format!("Ambiguous patients: {}\n", if amb.is_empty() { "-".to_string() } else { amb.join(", ") }));
    out.push_str(&format!("Digest: {}\n", report.digest));
    out
}
