use serde::Serialize;

use crate::neural::{grad_check, Activation, GradCheckReport};

use super::{EstimatorError, FusionConfig, Preset, Variant};

/// One configuration of the gradient-check suite and its result.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckCase {
    pub name: String,
    pub seed: u64,
    pub seq_len: usize,
    pub config: FusionConfig,
    #[serde(skip)]
    pub report: GradCheckReport,
}

impl GradCheckCase {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// The `k`-th small configuration: variants, type input, activations and
/// widths cycle so that every variant is covered within six cases.
pub fn suite_config(k: usize, seed: u64) -> (FusionConfig, usize) {
    let variant = Variant::ALL[k % Variant::ALL.len()];
    let mut c = FusionConfig::for_variant(variant, Preset::Desk);
    c.use_ptype = k.is_multiple_of(2);
    c.d_img = 3 + k % 4;
    c.enc_image = 2 + k % 3;
    c.enc_tools = 2 + (k + 1) % 3;
    c.enc_device = 2 + (k + 2) % 3;
    c.encoder_activation = [Activation::Tanh, Activation::Sigmoid, Activation::Identity][k % 3];
    c.hidden = 2 + (5 * k) % 15;
    c.seed = seed.wrapping_add(k as u64);
    let seq_len = 2 + (7 * k) % 19;
    (c, seq_len)
}

/// Runs `count` seeded finite-difference checks of the full network
/// (hidden ≤ 16, sequences ≤ 20 steps).
pub fn gradient_check_suite(
    seed: u64,
    count: usize,
    tolerance: f64,
) -> Result<Vec<GradCheckCase>, EstimatorError> {
    (0..count)
        .map(|k| {
            let (config, seq_len) = suite_config(k, seed);
            config.validate()?;
            let report = grad_check(&config.network_shape(), config.seed, seq_len, tolerance)?;
            Ok(GradCheckCase {
                name: format!(
                    "{} hidden={} seq={} ptype={} act={:?}",
                    config.name(),
                    config.hidden,
                    seq_len,
                    config.use_ptype,
                    config.encoder_activation
                ),
                seed: config.seed,
                seq_len,
                config,
                report,
            })
        })
        .collect()
}
