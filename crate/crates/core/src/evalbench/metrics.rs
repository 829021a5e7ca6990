use serde::{Deserialize, Serialize};

use crate::estimator::PredictionPoint;

use super::EvalError;

/// Per-frame errors of one procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameErrors {
    /// `|n_hat_i - N|`, seconds.
    pub abs: Vec<f64>,
    /// `abs_i / N`.
    pub rel: Vec<f64>,
}

pub fn errors_for_procedure(
    predictions: &[PredictionPoint],
    n: usize,
) -> Result<FrameErrors, EvalError> {
    if predictions.len() != n {
        return Err(EvalError::LengthMismatch {
            expected: n,
            found: predictions.len(),
        });
    }
    if let Some((k, p)) = predictions.iter().enumerate().find(|(k, p)| p.i != k + 1) {
        return Err(EvalError::FrameIndex {
            position: k + 1,
            found: p.i,
        });
    }
    let n_hat: Vec<f64> = predictions.iter().map(|p| p.n_hat).collect();
    errors_for_estimates(&n_hat, n)
}

/// As [`errors_for_procedure`] for bare duration estimates of frames 1..=n.
pub fn errors_for_estimates(n_hat: &[f64], n: usize) -> Result<FrameErrors, EvalError> {
    if n_hat.len() != n || n == 0 {
        return Err(EvalError::LengthMismatch {
            expected: n,
            found: n_hat.len(),
        });
    }
    let total = n as f64;
    let abs: Vec<f64> = n_hat.iter().map(|v| (v - total).abs()).collect();
    let rel = abs.iter().map(|a| a / total).collect();
    Ok(FrameErrors { abs, rel })
}

/// Quartile of frame `i` (1-based) in a procedure of `n` frames:
/// `ceil(4i/n)` clamped to 1..=4.
pub fn quartile_of(i: usize, n: usize) -> usize {
    (4 * i).div_ceil(n).clamp(1, 4)
}

/// Frame at which the halftime error is read: `ceil(n/2)`.
pub fn halftime_frame(n: usize) -> usize {
    n.div_ceil(2).max(1)
}

/// Summary of one error sequence. Quartiles with no frames (only possible
/// when `n < 4`) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub quartiles: [Option<f64>; 4],
    pub mean: f64,
    pub halftime: f64,
}

pub fn summarize(errors: &[f64]) -> Option<SequenceSummary> {
    let n = errors.len();
    if n == 0 {
        return None;
    }
    // Means are accumulated relative to the first error, so a constant
    // sequence yields exactly that constant in every quartile.
    let shift = errors[0];
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for (k, e) in errors.iter().enumerate() {
        let q = quartile_of(k + 1, n) - 1;
        sums[q] += e - shift;
        counts[q] += 1;
    }
    let quartiles =
        std::array::from_fn(|q| (counts[q] > 0).then(|| shift + sums[q] / counts[q] as f64));
    Some(SequenceSummary {
        quartiles,
        mean: shift + errors.iter().map(|e| e - shift).sum::<f64>() / n as f64,
        halftime: errors[halftime_frame(n) - 1],
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    #[serde(with = "nan_as_null")]
    pub mean: f64,
    #[serde(with = "nan_as_null")]
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                count: 0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            count: values.len(),
        }
    }
}

/// Empty statistics are NaN in memory and `null` on disk.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Across-procedure statistics of one error kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub q1: MeanStd,
    pub q2: MeanStd,
    pub q3: MeanStd,
    pub q4: MeanStd,
    pub mean: MeanStd,
    pub halftime: MeanStd,
}

impl ErrorStats {
    pub fn quartiles(&self) -> [MeanStd; 4] {
        [self.q1, self.q2, self.q3, self.q4]
    }
}

/// Per-procedure summaries first, then mean ± population std of those
/// values across procedures.
pub fn quartile_report<'a, I>(sequences: I) -> ErrorStats
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let summaries: Vec<SequenceSummary> = sequences.into_iter().filter_map(summarize).collect();
    let quartile = |q: usize| {
        let v: Vec<f64> = summaries.iter().filter_map(|s| s.quartiles[q]).collect();
        MeanStd::of(&v)
    };
    let means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
    let half: Vec<f64> = summaries.iter().map(|s| s.halftime).collect();
    ErrorStats {
        q1: quartile(0),
        q2: quartile(1),
        q3: quartile(2),
        q4: quartile(3),
        mean: MeanStd::of(&means),
        halftime: MeanStd::of(&half),
    }
}
