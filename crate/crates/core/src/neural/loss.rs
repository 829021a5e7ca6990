use super::NeuralError;

/// Outputs are kept this far from 0 and 1 so a saturated sigmoid yields a
/// large but finite loss.
const PROB_FLOOR: f64 = 1e-15;

/// Time-averaged sigmoid cross-entropy between outputs `y` and labels `l`.
pub fn bce_loss(y: &[f64], l: &[f64]) -> Result<f64, NeuralError> {
    if y.len() != l.len() {
        return Err(NeuralError::Shape {
            what: "loss labels".into(),
            expected: y.len(),
            found: l.len(),
        });
    }
    if y.is_empty() {
        return Err(NeuralError::EmptySequence);
    }
    let total: f64 = y
        .iter()
        .zip(l)
        .map(|(&yi, &li)| {
            let p = yi.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            -(li * p.ln() + (1.0 - li) * (-p).ln_1p())
        })
        .sum();
    Ok(total / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_points() {
        let ln2 = std::f64::consts::LN_2;
        assert!((bce_loss(&[0.5], &[0.5]).unwrap() - ln2).abs() < 1e-15);
        assert!((bce_loss(&[0.5, 0.5], &[0.0, 1.0]).unwrap() - ln2).abs() < 1e-15);
    }

    #[test]
    fn matches_compensated_oracle() {
        // Oracle: Kahan-summed direct formula without clamping or ln_1p.
        let y: [f64; 6] = [0.13, 0.72, 0.5, 0.999, 0.01, 0.64];
        let l: [f64; 6] = [0.1, 0.9, 0.3, 1.0, 0.0, 0.64];
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (yi, li) in y.iter().zip(&l) {
            let term = -(li * yi.ln() + (1.0 - li) * (1.0 - yi).ln()) - comp;
            let t = sum + term;
            comp = (t - sum) - term;
            sum = t;
        }
        let expected = sum / y.len() as f64;
        assert!((bce_loss(&y, &l).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn length_mismatch() {
        assert!(bce_loss(&[0.5], &[0.5, 0.5]).is_err());
        assert!(bce_loss(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn non_negative(pairs in prop::collection::vec((0.0001f64..0.9999, 0.0f64..=1.0), 1..50)) {
            let (y, l): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert!(bce_loss(&y, &l).unwrap() >= 0.0);
        }

        #[test]
        fn minimized_at_label(l in 0.01f64..0.99, dy in 0.001f64..0.3) {
            let at = bce_loss(&[l], &[l]).unwrap();
            let up = bce_loss(&[(l + dy).min(0.9999)], &[l]).unwrap();
            let down = bce_loss(&[(l - dy).max(0.0001)], &[l]).unwrap();
            prop_assert!(at <= up && at <= down);
        }
    }
}
