use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{Frame, ProcedureRecord, ProcedureType};
use crate::neural::{AdamState, Network};

use super::{EstimatorError, FusionConfig, PredictionPoint};

/// A configured fusion network plus optional optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: FusionConfig,
    pub network: Network,
    pub adam: Option<AdamState>,
}

impl Model {
    pub fn recurrent_width(&self) -> usize {
        self.network.recurrent_width()
    }

    /// Offline predictions for a whole record.
    pub fn predict_record(
        &self,
        record: &ProcedureRecord,
    ) -> Result<Vec<PredictionPoint>, EstimatorError> {
        let inputs = record_inputs(record, &self.config)?;
        let (y, _) = self.network.forward_sequence(&inputs)?;
        Ok(y.into_iter()
            .enumerate()
            .map(|(k, y)| PredictionPoint::from_progress(k + 1, y, self.config.epsilon_progress))
            .collect())
    }

    /// Offline progress outputs for a whole record.
    pub fn forward_record(&self, record: &ProcedureRecord) -> Result<Vec<f64>, EstimatorError> {
        let inputs = record_inputs(record, &self.config)?;
        Ok(self.network.forward_sequence(&inputs)?.0)
    }
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn build_with_rng(
    config: &FusionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Model, EstimatorError> {
    config.validate()?;
    Ok(Model {
        config: config.clone(),
        network: Network::init(&config.network_shape(), rng),
        adam: None,
    })
}

/// Seeded initialization of the network described by `config`.
pub fn build_model(config: &FusionConfig) -> Result<Model, EstimatorError> {
    build_with_rng(config, &mut seeded_rng(config.seed))
}

/// Raw network input of one frame: enabled channel values in the order
/// image, tools, device (normalized), then the type one-hot.
pub fn raw_input(
    frame: &Frame,
    config: &FusionConfig,
    ptype: ProcedureType,
) -> Result<Vec<f64>, EstimatorError> {
    let missing = |channel: &'static str| EstimatorError::MissingChannel {
        record: format!("frame t={}", frame.t),
        channel,
    };
    let mut out = Vec::with_capacity(config.network_shape().raw_width());
    if config.use_image {
        let img = frame.image.as_ref().ok_or_else(|| missing("img"))?;
        if img.len() != config.d_img {
            return Err(EstimatorError::ImageWidth {
                record: format!("frame t={}", frame.t),
                expected: config.d_img,
                found: img.len(),
            });
        }
        out.extend_from_slice(img);
    }
    if config.use_tools {
        out.extend_from_slice(frame.tools.as_ref().ok_or_else(|| missing("tools"))?);
    }
    if config.use_device {
        out.extend_from_slice(
            frame
                .device
                .as_ref()
                .ok_or_else(|| missing("device"))?
                .normalized(),
        );
    }
    if config.use_ptype {
        out.extend_from_slice(&ptype.one_hot());
    }
    Ok(out)
}

/// Recurrent-cell input of one frame: the enabled encoders' outputs
/// followed by the type one-hot.
pub fn assemble_input(
    frame: &Frame,
    model: &Model,
    ptype: ProcedureType,
) -> Result<Vec<f64>, EstimatorError> {
    let raw = raw_input(frame, &model.config, ptype)?;
    Ok(model.network.encode(&raw)?)
}

/// Raw inputs for every frame of a record.
pub fn record_inputs(
    record: &ProcedureRecord,
    config: &FusionConfig,
) -> Result<Vec<Vec<f64>>, EstimatorError> {
    config.check_channels(record.id(), record.channels())?;
    record
        .frames()
        .iter()
        .map(|f| raw_input(f, config, record.ptype()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{ChannelSet, DeviceSample, DEVICE_SIGNALS, TOOL_COUNT};
    use crate::estimator::{Preset, Variant};

    fn frame(d_img: usize) -> Frame {
        Frame {
            t: 1,
            device: Some(DeviceSample::from_raw(vec![5.0; DEVICE_SIGNALS]).unwrap()),
            tools: Some(vec![1.0; TOOL_COUNT]),
            image: Some(vec![0.25; d_img]),
        }
    }

    #[test]
    fn assembled_widths() {
        let ptype = ProcedureType::new(3).unwrap();
        let mut t = FusionConfig::for_variant(Variant::T, Preset::Desk);
        t.use_ptype = false;
        t.enc_tools = 8;
        t.hidden = 4;
        let model = build_model(&t).unwrap();
        assert_eq!(assemble_input(&frame(64), &model, ptype).unwrap().len(), 8);

        let mut vtd = FusionConfig::default();
        vtd.hidden = 4;
        let model = build_model(&vtd).unwrap();
        let u = assemble_input(&frame(64), &model, ptype).unwrap();
        assert_eq!(u.len(), vtd.enc_image + vtd.enc_tools + vtd.enc_device + 5);
        assert_eq!(&u[u.len() - 5..], &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn device_only_width() {
        let mut d = FusionConfig::for_variant(Variant::D, Preset::Desk);
        d.hidden = 3;
        let m = build_model(&d).unwrap();
        assert_eq!(m.recurrent_width(), d.enc_device + 5);
        assert_eq!(m.network.cell.input_dim(), d.enc_device + 5);
    }

    #[test]
    fn same_seed_same_model() {
        let mut c = FusionConfig::default();
        c.hidden = 8;
        c.seed = 1234;
        assert_eq!(build_model(&c).unwrap(), build_model(&c).unwrap());
        let mut other = c.clone();
        other.seed = 1235;
        assert_ne!(build_model(&c).unwrap(), build_model(&other).unwrap());
    }

    #[test]
    fn missing_channel_is_reported() {
        let mut f = frame(64);
        f.device = None;
        let d = FusionConfig::for_variant(Variant::D, Preset::Desk);
        let err = raw_input(&f, &d, ProcedureType::new(1).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            EstimatorError::MissingChannel {
                channel: "device",
                ..
            }
        ));

        let channels = ChannelSet {
            device: false,
            tools: true,
            image: false,
            d_img: 0,
        };
        assert!(d.check_channels("p", &channels).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = FusionConfig::default();
        c.use_image = false;
        c.use_tools = false;
        c.use_device = false;
        assert!(matches!(
            build_model(&c),
            Err(EstimatorError::InvalidConfig(_))
        ));
    }

    #[test]
    fn vtd_with_silenced_encoders_matches_d() {
        // Zeroing the image and tool encoders (weights and biases) makes their
        // tanh outputs exactly 0, so VTD sees the same device features and
        // type one-hot as a D model with the same device encoder.
        let ptype = ProcedureType::new(2).unwrap();
        let mut vtd_cfg = FusionConfig::default();
        vtd_cfg.hidden = 4;
        let mut vtd = build_model(&vtd_cfg).unwrap();
        let mut d_cfg = FusionConfig::for_variant(Variant::D, Preset::Desk);
        d_cfg.hidden = 4;
        d_cfg.seed = 99;
        let d = build_model(&d_cfg).unwrap();
        for enc in &mut vtd.network.encoders[..2] {
            enc.weights.data_mut().fill(0.0);
            enc.bias.fill(0.0);
        }
        vtd.network.encoders[2] = d.network.encoders[0].clone();

        let f = frame(64);
        let u_vtd = assemble_input(&f, &vtd, ptype).unwrap();
        let u_d = assemble_input(&f, &d, ptype).unwrap();
        let silent = vtd_cfg.enc_image + vtd_cfg.enc_tools;
        assert!(u_vtd[..silent].iter().all(|&v| v == 0.0));
        assert_eq!(&u_vtd[silent..], &u_d[..]);
    }
}
