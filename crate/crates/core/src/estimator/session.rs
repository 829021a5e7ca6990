use crate::datamodel::{Frame, ProcedureType};

use super::model::raw_input;
use super::{EstimatorError, Model, PredictionPoint};

/// Online inference state for one running procedure.
///
/// Borrowing the model immutably lets any number of sessions share it.
#[derive(Debug, Clone)]
pub struct Session<'m> {
    model: &'m Model,
    h: Vec<f64>,
    i: usize,
    ptype: ProcedureType,
}

pub fn open_session(model: &Model, ptype: ProcedureType) -> Session<'_> {
    Session {
        model,
        h: vec![0.0; model.network.hidden()],
        i: 0,
        ptype,
    }
}

impl<'m> Session<'m> {
    /// Frames consumed so far.
    pub fn frames_seen(&self) -> usize {
        self.i
    }

    pub fn state(&self) -> &[f64] {
        &self.h
    }

    pub fn ptype(&self) -> ProcedureType {
        self.ptype
    }

    /// Consumes the next frame (`t` must equal frames seen + 1).
    pub fn feed(&mut self, frame: &Frame) -> Result<PredictionPoint, EstimatorError> {
        let expected = self.i + 1;
        if frame.t != expected {
            return Err(EstimatorError::OutOfOrder {
                expected,
                found: frame.t,
            });
        }
        let raw = raw_input(frame, &self.model.config, self.ptype)?;
        let (h, y) = self.model.network.step(&self.h, &raw)?;
        if !y.is_finite() || h.iter().any(|v| !v.is_finite()) {
            return Err(crate::neural::NeuralError::NonFinite { step: expected }.into());
        }
        self.h = h;
        self.i = expected;
        Ok(PredictionPoint::from_progress(
            expected,
            y,
            self.model.config.epsilon_progress,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{ChannelSet, DeviceSample, ProcedureRecord, DEVICE_SIGNALS};
    use crate::estimator::{build_model, FusionConfig, Preset, Variant};

    fn record(n: usize) -> ProcedureRecord {
        let frames = (1..=n)
            .map(|t| Frame {
                t,
                device: Some(
                    DeviceSample::from_raw((0..DEVICE_SIGNALS).map(|k| (t * k) as f64).collect())
                        .unwrap(),
                ),
                tools: None,
                image: None,
            })
            .collect();
        let channels = ChannelSet {
            device: true,
            tools: false,
            image: false,
            d_img: 0,
        };
        ProcedureRecord::new("s", ProcedureType::new(4).unwrap(), channels, frames).unwrap()
    }

    fn model() -> Model {
        let mut c = FusionConfig::for_variant(Variant::D, Preset::Desk);
        c.hidden = 6;
        c.enc_device = 4;
        build_model(&c).unwrap()
    }

    #[test]
    fn streaming_equals_batch() {
        let m = model();
        let rec = record(25);
        let batch = m.forward_record(&rec).unwrap();
        let mut s = open_session(&m, rec.ptype());
        for (frame, y) in rec.frames().iter().zip(&batch) {
            let p = s.feed(frame).unwrap();
            assert_eq!(p.y.to_bits(), y.to_bits());
        }
        assert_eq!(s.frames_seen(), 25);
    }

    #[test]
    fn out_of_order_rejected() {
        let m = model();
        let rec = record(3);
        let mut s = open_session(&m, rec.ptype());
        assert!(matches!(
            s.feed(&rec.frames()[1]),
            Err(EstimatorError::OutOfOrder {
                expected: 1,
                found: 2
            })
        ));
        s.feed(&rec.frames()[0]).unwrap();
        assert!(s.feed(&rec.frames()[0]).is_err());
        assert_eq!(s.frames_seen(), 1);
    }

    #[test]
    fn interleaved_sessions_are_isolated() {
        let m = model();
        let a = record(10);
        let b = record(7);
        let serial_a: Vec<_> = {
            let mut s = open_session(&m, a.ptype());
            a.frames().iter().map(|f| s.feed(f).unwrap()).collect()
        };
        let serial_b: Vec<_> = {
            let mut s = open_session(&m, ProcedureType::new(1).unwrap());
            b.frames().iter().map(|f| s.feed(f).unwrap()).collect()
        };
        let mut sa = open_session(&m, a.ptype());
        let mut sb = open_session(&m, ProcedureType::new(1).unwrap());
        let mut got_a = Vec::new();
        let mut got_b = Vec::new();
        for k in 0..10 {
            got_a.push(sa.feed(&a.frames()[k]).unwrap());
            if k < 7 {
                got_b.push(sb.feed(&b.frames()[k]).unwrap());
            }
        }
        assert_eq!(got_a, serial_a);
        assert_eq!(got_b, serial_b);
    }

    #[test]
    fn threads_share_a_model() {
        let m = model();
        let rec = record(12);
        let expected = m.forward_record(&rec).unwrap();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..3)
                .map(|_| {
                    scope.spawn(|| {
                        let mut s = open_session(&m, rec.ptype());
                        rec.frames()
                            .iter()
                            .map(|f| s.feed(f).unwrap().y)
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                assert_eq!(h.join().unwrap(), expected);
            }
        });
    }
}
