//! Outer cross-validation, metrics, confidence intervals, ROC bands and
//! statistical comparison.

pub mod experiment;
pub mod metrics;
pub mod roc;
pub mod split;
pub mod stats;
pub mod typicality;

pub use experiment::{fit_iteration, make_plan, predict_iteration, render_report, run_experiment, EvaluationReport, ExperimentSettings, FittedIteration};
pub use metrics::{auc, bca, confusion_metrics, corrected_resampled_ci, format_bound, format_interval, Confusion, Interval};
pub use roc::{roc_band, roc_curve, RocBand};
pub use split::{leave_one_out_plan, random_split_plan, Split, SplitMode, SplitPlan};
pub use stats::{bonferroni, chi_square, cohens_kappa, delong_test, mann_whitney_u, DelongResult};
pub use typicality::{rank_typicality, PatientCount, Typicality};
