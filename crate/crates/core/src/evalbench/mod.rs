//! Type-balanced four-fold evaluation, constant-duration baselines and
//! quartile/halftime error reports.

mod baseline;
mod folds;
mod metrics;
mod report;
mod run;

use thiserror::Error;

use crate::estimator::EstimatorError;

pub use baseline::{fit_baseline, BaselineKind, BaselinePredictor};
pub use folds::{make_folds, FoldSplit, FOLDS};
pub use metrics::{
    errors_for_estimates, errors_for_procedure, halftime_frame, quartile_of, quartile_report,
    summarize, ErrorStats, FrameErrors, MeanStd, SequenceSummary,
};
pub use report::{EvalReport, MethodReport, ProcedureResult, TypeBreakdown, AGGREGATION_NOTE};
pub use run::{fold_seed, run_eval, run_eval_with_log};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("duplicate procedure id {0}")]
    DuplicateId(String),
    #[error("duplicate method name {0}")]
    DuplicateMethod(String),
    #[error("expected {expected} predictions, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("prediction at position {position} has frame index {found}")]
    FrameIndex { position: usize, found: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}
