use serde::{Deserialize, Serialize};

use crate::datamodel::{ProcedureRecord, ProcedureType, PROCEDURE_TYPES};
use crate::estimator::PredictionPoint;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Naive,
    PerType,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::Naive => "naive",
            BaselineKind::PerType => "type",
        }
    }
}

/// Constant duration predictor fitted on training procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePredictor {
    pub kind: BaselineKind,
    pub global_mean: f64,
    /// Per type (index 0 = type 1); types absent from training fall back to
    /// the global mean.
    pub type_means: Vec<f64>,
}

pub fn fit_baseline(
    train: &[ProcedureRecord],
    kind: BaselineKind,
) -> Result<BaselinePredictor, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let global_mean = train.iter().map(|r| r.duration() as f64).sum::<f64>() / train.len() as f64;
    let type_means = ProcedureType::all()
        .map(|t| {
            let d: Vec<f64> = train
                .iter()
                .filter(|r| r.ptype() == t)
                .map(|r| r.duration() as f64)
                .collect();
            if d.is_empty() {
                global_mean
            } else {
                d.iter().sum::<f64>() / d.len() as f64
            }
        })
        .collect::<Vec<_>>();
    debug_assert_eq!(type_means.len(), PROCEDURE_TYPES);
    Ok(BaselinePredictor {
        kind,
        global_mean,
        type_means,
    })
}

impl BaselinePredictor {
    pub fn duration_for(&self, ptype: ProcedureType) -> f64 {
        match self.kind {
            BaselineKind::Naive => self.global_mean,
            BaselineKind::PerType => self.type_means[ptype.index()],
        }
    }

    /// Constant predictions for frames 1..=n of a procedure of type `ptype`.
    pub fn predict(&self, ptype: ProcedureType, n: usize) -> Vec<PredictionPoint> {
        let n_hat = self.duration_for(ptype);
        (1..=n)
            .map(|i| PredictionPoint {
                i,
                y: i as f64 / n_hat,
                n_hat,
                remaining: n_hat - i as f64,
            })
            .collect()
    }
}
