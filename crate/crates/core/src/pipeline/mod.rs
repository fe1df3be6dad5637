//! Workflow building blocks, each fitted on training rows only.

pub mod classify;
pub mod config;
pub mod discriminant;
pub mod forest;
pub mod impute;
pub mod logistic;
pub mod matrix;
pub mod resample;
pub mod scale;
pub mod select;
pub mod svm;
pub mod workflow;

pub use classify::{Classifier, ClassifierSpec};
pub use config::{SearchSpace, WorkflowConfig, SPACE_VERSION};
pub use impute::{Imputer, ImputerKind};
pub use matrix::Matrix;
pub use resample::Resampler;
pub use select::PcaMode;
pub use workflow::FittedWorkflow;
