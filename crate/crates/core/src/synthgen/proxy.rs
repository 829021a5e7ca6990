use crate::datamodel::{ProcedureRecord, DEVICE_SIGNALS, TOOL_COUNT};

use super::{oracle_progress, SynthError, SynthTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Image,
    Tools,
    Device,
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Mutual-information proxy: the largest |Pearson correlation| between any
/// channel of `modality` and true progress, pooled over all frames.
pub fn modality_correlation(
    records: &[ProcedureRecord],
    trace: &SynthTrace,
    modality: Modality,
) -> Result<f64, SynthError> {
    let width = match modality {
        Modality::Image => records.first().map_or(0, |r| r.channels().d_img),
        Modality::Tools => TOOL_COUNT,
        Modality::Device => DEVICE_SIGNALS,
    };
    let mut columns = vec![Vec::new(); width];
    let mut progress = Vec::new();
    for r in records {
        progress.extend(oracle_progress(r, trace)?.progress);
        for f in r.frames() {
            let values: &[f64] = match modality {
                Modality::Image => f.image.as_deref(),
                Modality::Tools => f.tools.as_deref(),
                Modality::Device => f.device.as_ref().map(|d| d.normalized()),
            }
            .ok_or_else(|| SynthError::InvalidSpec(format!("{}: modality not emitted", r.id())))?;
            if values.len() != width {
                return Err(SynthError::InvalidSpec(format!(
                    "{}: inconsistent width",
                    r.id()
                )));
            }
            for (c, v) in columns.iter_mut().zip(values) {
                c.push(*v);
            }
        }
    }
    Ok(columns
        .iter()
        .map(|c| pearson(c, &progress).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, Informativeness, SynthSpec};

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn correlation_grows_with_informativeness() {
        for modality in [Modality::Image, Modality::Tools, Modality::Device] {
            let mut last = -1.0;
            for a in [0.0, 0.3, 0.6, 1.0] {
                let mut inf = Informativeness::NONE;
                match modality {
                    Modality::Image => inf.image = a,
                    Modality::Tools => inf.tools = a,
                    Modality::Device => inf.device = a,
                }
                let spec = SynthSpec {
                    n_procedures: 30,
                    seed: 21,
                    d_img: 8,
                    modality_informativeness: inf,
                    ..SynthSpec::default()
                };
                let out = generate(&spec).unwrap();
                let c = modality_correlation(&out.records, &out.trace, modality).unwrap();
                assert!(c > last, "{modality:?} at {a}: {c} <= {last}");
                last = c;
            }
            assert!(last > 0.3, "{modality:?}: {last}");
        }
    }
}
