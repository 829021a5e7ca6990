use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datamodel::ProcedureRecord;
use crate::neural::{bce_loss, AdamState};

use super::model::{build_with_rng, record_inputs, seeded_rng};
use super::{progress_label, EstimatorError, FusionConfig, Model};

/// Mean training loss of every epoch, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epoch_losses: Vec<f64>,
}

/// Trains a fresh model on `records`: one Adam step per procedure,
/// procedures shuffled every epoch. Fully determined by `config.seed`.
pub fn train(
    records: &[ProcedureRecord],
    config: &FusionConfig,
) -> Result<(Model, TrainingLog), EstimatorError> {
    train_with_progress(records, config, |_, _| {})
}

/// As [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with_progress<F: FnMut(usize, f64)>(
    records: &[ProcedureRecord],
    config: &FusionConfig,
    mut on_epoch: F,
) -> Result<(Model, TrainingLog), EstimatorError> {
    let mut rng = seeded_rng(config.seed);
    let mut model = build_with_rng(config, &mut rng)?;
    let mut log = TrainingLog::default();
    if config.epochs == 0 {
        return Ok((model, log));
    }
    if records.is_empty() {
        return Err(EstimatorError::InvalidConfig(
            "no training procedures".into(),
        ));
    }

    let mut data = Vec::with_capacity(records.len());
    for r in records {
        let inputs = record_inputs(r, config)?;
        let n = inputs.len();
        let labels = (1..=n)
            .map(|i| progress_label(i, n))
            .collect::<Result<Vec<_>, _>>()?;
        data.push((r.id(), inputs, labels));
    }

    let lens: Vec<usize> = model
        .network
        .tensors()
        .iter()
        .map(|(_, t)| t.len())
        .collect();
    let mut adam = AdamState::new(config.lr, &lens);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let (id, inputs, labels) = &data[k];
            let (y, cache) = model.network.forward_sequence(inputs)?;
            let loss = bce_loss(&y, labels)?;
            let mut grads = model.network.backward_sequence(&cache, labels)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(EstimatorError::NonFiniteLoss {
                    epoch,
                    procedure: id.to_string(),
                });
            }
            if let Some(max) = config.clip_norm {
                grads.clip_norm(max);
            }
            let g: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, t)| t).collect();
            adam.step(&mut model.network.tensors_mut(), &g)?;
            total += loss;
        }
        let mean = total / data.len() as f64;
        log.epoch_losses.push(mean);
        on_epoch(epoch, mean);
    }
    model.adam = Some(adam);
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{ChannelSet, DeviceSample, Frame, ProcedureType, DEVICE_SIGNALS};
    use crate::estimator::{build_model, Preset, Variant};

    fn ramp(id: &str, n: usize) -> ProcedureRecord {
        // Insufflated gas volume (index 4) grows linearly with progress.
        let frames = (1..=n)
            .map(|t| {
                let mut raw = vec![0.0; DEVICE_SIGNALS];
                raw[4] = 9000.0 * t as f64 / n as f64;
                Frame {
                    t,
                    device: Some(DeviceSample::from_raw(raw).unwrap()),
                    tools: None,
                    image: None,
                }
            })
            .collect();
        let channels = ChannelSet {
            device: true,
            tools: false,
            image: false,
            d_img: 0,
        };
        ProcedureRecord::new(id, ProcedureType::new(1).unwrap(), channels, frames).unwrap()
    }

    fn config(epochs: usize) -> FusionConfig {
        let mut c = FusionConfig::for_variant(Variant::D, Preset::Desk);
        c.hidden = 6;
        c.enc_device = 4;
        c.epochs = epochs;
        c.lr = 1e-2;
        c.seed = 5;
        c
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (m, log) = train(&[ramp("a", 10)], &config(0)).unwrap();
        assert_eq!(m, build_model(&config(0)).unwrap());
        assert!(log.epoch_losses.is_empty());
    }

    #[test]
    fn loss_decreases() {
        let data: Vec<_> = (0..4)
            .map(|k| ramp(&format!("p{k}"), 20 + 10 * k))
            .collect();
        let (m, log) = train(&data, &config(40)).unwrap();
        assert_eq!(log.epoch_losses.len(), 40);
        assert!(
            log.epoch_losses[39] < log.epoch_losses[0] * 0.95,
            "{:?}",
            log.epoch_losses
        );
        assert_eq!(m.adam.as_ref().unwrap().t, 160);
    }

    #[test]
    fn deterministic() {
        let data: Vec<_> = (0..3).map(|k| ramp(&format!("p{k}"), 15 + k)).collect();
        let (a, la) = train(&data, &config(5)).unwrap();
        let (b, lb) = train(&data, &config(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn wrong_channels_fail_before_training() {
        let mut c = config(3);
        c.use_device = false;
        c.use_tools = true;
        let err = train(&[ramp("a", 5)], &c).unwrap_err();
        assert!(matches!(
            err,
            EstimatorError::MissingChannel {
                channel: "tools",
                ..
            }
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut c = config(3);
        c.lr = f64::MAX;
        let err = train(&[ramp("a", 30), ramp("b", 30)], &c).unwrap_err();
        assert!(
            matches!(
                err,
                EstimatorError::NonFiniteLoss { .. } | EstimatorError::Neural(_)
            ),
            "{err}"
        );
    }
}
