//! JSON checkpoints. Floats are written with shortest round-trip
//! formatting, so save → load → save is byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::neural::{Activation, AdamState, Network, GRU_CONVENTION};

use super::{EstimatorError, FusionConfig, Model, Preset};

pub const CHECKPOINT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u64,
    gru_convention: String,
    preset: Preset,
    seed: u64,
    config: FusionConfig,
    parameters: Network,
    adam_state: Option<AdamState>,
}

pub fn checkpoint_to_string(model: &Model) -> Result<String, EstimatorError> {
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        gru_convention: GRU_CONVENTION.to_string(),
        preset: model.config.preset,
        seed: model.config.seed,
        config: model.config.clone(),
        parameters: model.network.clone(),
        adam_state: model.adam.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file)
        .map_err(|e| EstimatorError::Corrupt(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<(), EstimatorError> {
    let io = |source| EstimatorError::Io {
        path: path.display().to_string(),
        source,
    };
    let text = checkpoint_to_string(model)?;
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<Model, EstimatorError> {
    let text = fs::read_to_string(path).map_err(|source| EstimatorError::Io {
        path: path.display().to_string(),
        source,
    })?;
    checkpoint_from_str(&text)
}

pub fn checkpoint_from_str(text: &str) -> Result<Model, EstimatorError> {
    let corrupt = |msg: String| EstimatorError::Corrupt(msg);
    let value: Value =
        serde_json::from_str(text).map_err(|e| corrupt(format!("not valid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    match version.as_u64() {
        Some(CHECKPOINT_VERSION) => {}
        Some(found) => {
            return Err(EstimatorError::Version {
                found,
                supported: CHECKPOINT_VERSION,
            })
        }
        None => {
            return Err(corrupt(format!(
                "format_version is not an integer: {version}"
            )))
        }
    }
    let file: CheckpointFile =
        serde_json::from_value(value).map_err(|e| corrupt(format!("malformed checkpoint: {e}")))?;
    if file.gru_convention != GRU_CONVENTION {
        return Err(corrupt(format!(
            "unsupported GRU convention {:?} (expected {GRU_CONVENTION:?})",
            file.gru_convention
        )));
    }
    if file.preset != file.config.preset || file.seed != file.config.seed {
        return Err(corrupt("preset/seed disagree with config".into()));
    }
    file.config
        .validate()
        .map_err(|e| corrupt(format!("invalid config: {e}")))?;
    let net = file.parameters;
    net.validate()
        .map_err(|e| corrupt(format!("invalid parameters: {e}")))?;
    if net.shape() != file.config.network_shape() {
        return Err(corrupt("parameter shapes do not match config".into()));
    }
    if net.head.activation != Activation::Sigmoid
        || net
            .encoders
            .iter()
            .any(|e| e.activation != file.config.encoder_activation)
    {
        return Err(corrupt("layer activations do not match config".into()));
    }
    if let Some(adam) = &file.adam_state {
        let lens: Vec<usize> = net.tensors().iter().map(|(_, t)| t.len()).collect();
        if adam.tensor_lens() != lens || adam.v.iter().map(Vec::len).ne(lens.iter().copied()) {
            return Err(corrupt("optimizer state does not match parameters".into()));
        }
        let finite = adam
            .m
            .iter()
            .chain(&adam.v)
            .flatten()
            .all(|v| v.is_finite())
            && [adam.beta1, adam.beta2, adam.eps, adam.lr]
                .iter()
                .all(|v| v.is_finite());
        if !finite {
            return Err(corrupt("optimizer state contains non-finite values".into()));
        }
    }
    Ok(Model {
        config: file.config,
        network: net,
        adam: file.adam_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{build_model, Variant};

    fn model() -> Model {
        let mut c = FusionConfig::for_variant(Variant::TD, Preset::Desk);
        c.hidden = 5;
        c.enc_tools = 3;
        c.enc_device = 4;
        c.seed = 77;
        let mut m = build_model(&c).unwrap();
        let lens: Vec<usize> = m.network.tensors().iter().map(|(_, t)| t.len()).collect();
        let mut adam = AdamState::new(c.lr, &lens);
        adam.t = 3;
        adam.m[0][0] = 0.1 + 0.2;
        m.adam = Some(adam);
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let s = checkpoint_to_string(&m).unwrap();
        let back = checkpoint_from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(checkpoint_to_string(&back).unwrap(), s);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m = model();
        save_checkpoint(&m, &p).unwrap();
        assert_eq!(load_checkpoint(&p).unwrap(), m);
    }

    #[test]
    fn version_mismatch() {
        let s = checkpoint_to_string(&model()).unwrap().replacen(
            "\"format_version\": 1",
            "\"format_version\": 9",
            1,
        );
        assert!(matches!(
            checkpoint_from_str(&s),
            Err(EstimatorError::Version { found: 9, .. })
        ));
    }

    #[test]
    fn truncated_is_corrupt() {
        let s = checkpoint_to_string(&model()).unwrap();
        let err = checkpoint_from_str(&s[..s.len() / 2]).unwrap_err();
        assert!(matches!(err, EstimatorError::Corrupt(_)), "{err}");
    }

    #[test]
    fn shape_mismatch_is_corrupt() {
        let m = model();
        let mut v: Value = serde_json::from_str(&checkpoint_to_string(&m).unwrap()).unwrap();
        v["config"]["hidden"] = 6.into();
        let err = checkpoint_from_str(&v.to_string()).unwrap_err();
        assert!(matches!(err, EstimatorError::Corrupt(_)), "{err}");
    }

    #[test]
    fn missing_file_is_io() {
        let err = load_checkpoint(Path::new("/nonexistent/ckpt.json")).unwrap_err();
        assert!(matches!(err, EstimatorError::Io { .. }));
    }
}
