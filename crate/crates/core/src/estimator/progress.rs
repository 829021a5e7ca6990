use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// Largest integer below which every integer is an exact `f64`.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

/// One online prediction, emitted after `i` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    pub i: usize,
    /// Predicted progress.
    pub y: f64,
    /// Predicted total duration, seconds.
    pub n_hat: f64,
    /// `n_hat - i`, seconds.
    pub remaining: f64,
}

impl PredictionPoint {
    pub fn from_progress(i: usize, y: f64, eps: f64) -> Self {
        let (n_hat, remaining) = duration_from_progress(i, y, eps);
        Self {
            i,
            y,
            n_hat,
            remaining,
        }
    }
}

/// Training label of frame `i` in a procedure of `n` frames: `i / n`.
pub fn progress_label(i: usize, n: usize) -> Result<f64, EstimatorError> {
    if n == 0 || i == 0 || i > n {
        return Err(EstimatorError::LabelRange { i, n });
    }
    Ok(i as f64 / n as f64)
}

/// Duration implied by progress `y` after `i` seconds: `i / max(y, eps)`.
///
/// When `y` is exactly the rounded label `i / n` of some integer duration
/// `n`, that `n` is returned, so labels invert exactly despite the rounding
/// of the division.
pub fn duration_from_progress(i: usize, y: f64, eps: f64) -> (f64, f64) {
    let elapsed = i as f64;
    let p = y.max(eps);
    let mut n_hat = elapsed / p;
    let n = n_hat.round();
    if n != n_hat && n >= elapsed && n < EXACT_INT_LIMIT && elapsed / n == p {
        n_hat = n;
    }
    (n_hat, n_hat - elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn label_examples() {
        assert_eq!(progress_label(7, 7).unwrap(), 1.0);
        assert_eq!(progress_label(1, 2).unwrap(), 0.5);
        assert!(progress_label(0, 3).is_err());
        assert!(progress_label(4, 3).is_err());
        assert!(progress_label(1, 0).is_err());
    }

    #[test]
    fn duration_examples() {
        assert_eq!(duration_from_progress(600, 0.5, 1e-4), (1200.0, 600.0));
        let (n, rem) = duration_from_progress(10, 0.0, 1e-4);
        assert!((n - 100_000.0).abs() < 1e-6);
        assert!((rem - 99_990.0).abs() < 1e-6);
        assert_eq!(duration_from_progress(42, 1.0, 1e-4), (42.0, 0.0));
    }

    #[test]
    fn inverts_labels_where_plain_division_does_not() {
        // 7 / (7 / 100) rounds to 100.00000000000001 without the lattice check.
        let y = progress_label(7, 100).unwrap();
        assert_ne!(7.0 / y, 100.0);
        assert_eq!(duration_from_progress(7, y, 1e-4), (100.0, 93.0));
    }

    #[test]
    fn non_label_progress_uses_plain_division() {
        let (n, _) = duration_from_progress(3, 0.3, 1e-4);
        assert_eq!(n, 3.0 / 0.3);
    }

    proptest! {
        #[test]
        fn inverse_identity(n in 1usize..200_000, frac in 0.0f64..1.0) {
            let i = ((frac * n as f64) as usize).clamp(1, n);
            let y = progress_label(i, n).unwrap();
            let (n_hat, rem) = duration_from_progress(i, y, 1e-7);
            prop_assert_eq!(n_hat, n as f64);
            prop_assert_eq!(rem, (n - i) as f64);
        }

        #[test]
        fn predictions_never_negative(i in 1usize..100_000, y in 0.0f64..=1.0) {
            let (n_hat, rem) = duration_from_progress(i, y, 1e-4);
            prop_assert!(n_hat >= i as f64);
            prop_assert!(rem >= 0.0);
        }
    }
}
