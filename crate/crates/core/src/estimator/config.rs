use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::{ChannelSet, DEFAULT_D_IMG, DEVICE_SIGNALS, PROCEDURE_TYPES, TOOL_COUNT};
use crate::neural::{Activation, NetworkShape};

use super::EstimatorError;

/// Network variants, named by their enabled input modalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    V,
    T,
    D,
    TD,
    VT,
    VTD,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::V,
        Variant::T,
        Variant::D,
        Variant::TD,
        Variant::VT,
        Variant::VTD,
    ];

    /// `(image, tools, device)`
    pub fn modalities(self) -> (bool, bool, bool) {
        match self {
            Variant::V => (true, false, false),
            Variant::T => (false, true, false),
            Variant::D => (false, false, true),
            Variant::TD => (false, true, true),
            Variant::VT => (true, true, false),
            Variant::VTD => (true, true, true),
        }
    }

    pub fn from_modalities(image: bool, tools: bool, device: bool) -> Option<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.modalities() == (image, tools, device))
    }

    /// Display name, e.g. `VTD-Net`.
    pub fn net_name(self) -> String {
        format!("{}-Net", self.flag().to_uppercase())
    }

    pub fn flag(self) -> &'static str {
        match self {
            Variant::V => "v",
            Variant::T => "t",
            Variant::D => "d",
            Variant::TD => "td",
            Variant::VT => "vt",
            Variant::VTD => "vtd",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for Variant {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.flag() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                EstimatorError::InvalidConfig(format!(
                    "unknown variant {s:?} (expected one of v, t, d, td, vt, vtd)"
                ))
            })
    }
}

/// Training hyper-parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// From-scratch training on desk-scale data.
    Desk,
    /// Learning rate 1e-6 for 50 epochs, the schedule used with a frozen
    /// pretrained feature extractor.
    Paper,
}

impl Preset {
    pub fn lr(self) -> f64 {
        match self {
            Preset::Desk => 1e-3,
            Preset::Paper => 1e-6,
        }
    }

    pub fn epochs(self) -> usize {
        match self {
            Preset::Desk => 30,
            Preset::Paper => 50,
        }
    }
}

impl FromStr for Preset {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(EstimatorError::InvalidConfig(format!(
                "unknown preset {other:?} (expected desk or paper)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        })
    }
}

pub const DEFAULT_EPSILON_PROGRESS: f64 = 1e-4;

/// Which inputs are enabled, all layer widths, and training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    pub use_image: bool,
    pub use_tools: bool,
    pub use_device: bool,
    pub use_ptype: bool,
    pub d_img: usize,
    pub enc_image: usize,
    pub enc_tools: usize,
    pub enc_device: usize,
    pub encoder_activation: Activation,
    pub hidden: usize,
    pub preset: Preset,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub clip_norm: Option<f64>,
    pub epsilon_progress: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self::for_variant(Variant::VTD, Preset::Desk)
    }
}

impl FusionConfig {
    pub fn for_variant(variant: Variant, preset: Preset) -> Self {
        let (use_image, use_tools, use_device) = variant.modalities();
        Self {
            use_image,
            use_tools,
            use_device,
            use_ptype: true,
            d_img: DEFAULT_D_IMG,
            enc_image: 64,
            enc_tools: 16,
            enc_device: 16,
            encoder_activation: Activation::Tanh,
            hidden: 128,
            preset,
            lr: preset.lr(),
            epochs: preset.epochs(),
            seed: 0,
            clip_norm: None,
            epsilon_progress: DEFAULT_EPSILON_PROGRESS,
        }
    }

    pub fn variant(&self) -> Option<Variant> {
        Variant::from_modalities(self.use_image, self.use_tools, self.use_device)
    }

    /// Variant display name, or a `+`-joined modality list for combinations
    /// without a named variant.
    pub fn name(&self) -> String {
        match self.variant() {
            Some(v) => v.net_name(),
            None => {
                let mut parts = Vec::new();
                if self.use_image {
                    parts.push("image");
                }
                if self.use_tools {
                    parts.push("tools");
                }
                if self.use_device {
                    parts.push("device");
                }
                parts.join("+")
            }
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let fail = |msg: &str| Err(EstimatorError::InvalidConfig(msg.to_string()));
        if !(self.use_image || self.use_tools || self.use_device) {
            return fail("at least one of image, tools, device must be enabled");
        }
        if self.use_image && (self.d_img == 0 || self.enc_image == 0) {
            return fail("image channel needs d_img >= 1 and enc_image >= 1");
        }
        if self.use_tools && self.enc_tools == 0 {
            return fail("enc_tools must be >= 1");
        }
        if self.use_device && self.enc_device == 0 {
            return fail("enc_device must be >= 1");
        }
        if self.hidden == 0 {
            return fail("hidden must be >= 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail("lr must be positive and finite");
        }
        if !(self.epsilon_progress > 0.0 && self.epsilon_progress <= 0.01) {
            return fail("epsilon_progress must lie in (0, 0.01]");
        }
        if let Some(c) = self.clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return fail("clip_norm must be positive and finite");
            }
        }
        Ok(())
    }

    /// Layer widths of the network this configuration builds. Encoders come
    /// in the fixed order image, tools, device; the type one-hot is the
    /// passthrough block.
    pub fn network_shape(&self) -> NetworkShape {
        let mut encoders = Vec::new();
        if self.use_image {
            encoders.push((self.d_img, self.enc_image));
        }
        if self.use_tools {
            encoders.push((TOOL_COUNT, self.enc_tools));
        }
        if self.use_device {
            encoders.push((DEVICE_SIGNALS, self.enc_device));
        }
        NetworkShape {
            encoders,
            encoder_activation: self.encoder_activation,
            passthrough: if self.use_ptype { PROCEDURE_TYPES } else { 0 },
            hidden: self.hidden,
        }
    }

    pub fn recurrent_width(&self) -> usize {
        self.network_shape().recurrent_width()
    }

    /// Checks that records with `channels` carry every enabled input.
    pub fn check_channels(&self, id: &str, channels: &ChannelSet) -> Result<(), EstimatorError> {
        let missing = |channel: &'static str| EstimatorError::MissingChannel {
            record: id.to_string(),
            channel,
        };
        if self.use_image && !channels.image {
            return Err(missing("img"));
        }
        if self.use_tools && !channels.tools {
            return Err(missing("tools"));
        }
        if self.use_device && !channels.device {
            return Err(missing("device"));
        }
        if self.use_image && channels.d_img != self.d_img {
            return Err(EstimatorError::ImageWidth {
                record: id.to_string(),
                expected: self.d_img,
                found: channels.d_img,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_naming() {
        for v in Variant::ALL {
            let c = FusionConfig::for_variant(v, Preset::Desk);
            assert_eq!(c.variant(), Some(v));
            assert_eq!(v.flag().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(Variant::VTD.net_name(), "VTD-Net");
        let mut odd = FusionConfig::for_variant(Variant::V, Preset::Desk);
        odd.use_device = true;
        assert_eq!(odd.variant(), None);
        assert_eq!(odd.name(), "image+device");
        assert!("x".parse::<Variant>().is_err());
    }

    #[test]
    fn presets() {
        let paper = FusionConfig::for_variant(Variant::D, Preset::Paper);
        assert_eq!((paper.lr, paper.epochs), (1e-6, 50));
        let desk = FusionConfig::for_variant(Variant::D, Preset::Desk);
        assert_eq!(desk.lr, 1e-3);
        assert_eq!("paper".parse::<Preset>().unwrap(), Preset::Paper);
    }

    #[test]
    fn widths() {
        let mut d = FusionConfig::for_variant(Variant::D, Preset::Desk);
        assert_eq!(d.recurrent_width(), d.enc_device + 5);
        d.use_ptype = false;
        assert_eq!(d.recurrent_width(), d.enc_device);
        let vtd = FusionConfig::default();
        assert_eq!(
            vtd.recurrent_width(),
            vtd.enc_image + vtd.enc_tools + vtd.enc_device + 5
        );
        let mut t = FusionConfig::for_variant(Variant::T, Preset::Desk);
        t.use_ptype = false;
        t.enc_tools = 8;
        assert_eq!(t.recurrent_width(), 8);
    }

    #[test]
    fn validation() {
        let mut c = FusionConfig::default();
        c.validate().unwrap();
        c.epsilon_progress = 0.02;
        assert!(c.validate().is_err());
        c.epsilon_progress = 0.0;
        assert!(c.validate().is_err());
        let mut none = FusionConfig::default();
        none.use_image = false;
        none.use_tools = false;
        none.use_device = false;
        assert!(none.validate().is_err());
    }
}
