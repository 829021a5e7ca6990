use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datamodel::{ProcedureType, DEFAULT_D_IMG, REFERENCE_COUNTS, REFERENCE_MINUTES};

use super::SynthError;

pub const MIN_DURATION: f64 = 60.0;
/// Mix-weighted mean duration of the default spec, seconds.
pub const DEFAULT_MEAN_SECONDS: f64 = 600.0;

/// How strongly each modality depends on the hidden phase / progress
/// (0 = pure noise, 1 = fully conditioned).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Informativeness {
    pub image: f64,
    pub tools: f64,
    pub device: f64,
}

impl Informativeness {
    pub const NONE: Self = Self {
        image: 0.0,
        tools: 0.0,
        device: 0.0,
    };
    pub const FULL: Self = Self {
        image: 1.0,
        tools: 1.0,
        device: 1.0,
    };
}

/// Which channels the generated records carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmittedChannels {
    pub device: bool,
    pub tools: bool,
    pub image: bool,
}

impl Default for EmittedChannels {
    fn default() -> Self {
        Self {
            device: true,
            tools: true,
            image: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_procedures: usize,
    /// Type id (1..=5) → proportion.
    pub type_mix: BTreeMap<u8, f64>,
    pub phases_per_type: usize,
    /// Type id → mean duration, seconds.
    pub mean_duration: BTreeMap<u8, f64>,
    pub duration_cv: f64,
    pub modality_informativeness: Informativeness,
    pub noise_sigma: f64,
    pub seed: u64,
    pub d_img: usize,
    pub channels: EmittedChannels,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let total: u32 = REFERENCE_COUNTS.iter().sum();
        let type_mix: BTreeMap<u8, f64> = ProcedureType::all()
            .map(|t| (t.id(), REFERENCE_COUNTS[t.index()] as f64 / total as f64))
            .collect();
        let weighted_minutes: f64 = ProcedureType::all()
            .map(|t| type_mix[&t.id()] * REFERENCE_MINUTES[t.index()])
            .sum();
        let scale = DEFAULT_MEAN_SECONDS / weighted_minutes;
        let mean_duration = ProcedureType::all()
            .map(|t| (t.id(), REFERENCE_MINUTES[t.index()] * scale))
            .collect();
        Self {
            n_procedures: 120,
            type_mix,
            phases_per_type: 6,
            mean_duration,
            duration_cv: 0.3,
            modality_informativeness: Informativeness::FULL,
            noise_sigma: 0.2,
            seed: 0,
            d_img: DEFAULT_D_IMG,
            channels: EmittedChannels::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_procedures == 0 {
            return fail("n_procedures must be >= 1".into());
        }
        if self.phases_per_type == 0 || self.phases_per_type as f64 > MIN_DURATION {
            return fail(format!("phases_per_type must lie in 1..={MIN_DURATION}"));
        }
        for (&t, &p) in &self.type_mix {
            if ProcedureType::new(t).is_err() {
                return fail(format!("type_mix: unknown procedure type {t}"));
            }
            if !(p.is_finite() && p >= 0.0) {
                return fail(format!("type_mix: proportion {p} for type {t}"));
            }
            if p > 0.0 && !self.mean_duration.contains_key(&t) {
                return fail(format!("mean_duration missing for type {t}"));
            }
        }
        let sum: f64 = self.type_mix.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("type_mix proportions sum to {sum}, expected 1"));
        }
        for (&t, &d) in &self.mean_duration {
            if ProcedureType::new(t).is_err() {
                return fail(format!("mean_duration: unknown procedure type {t}"));
            }
            if !(d.is_finite() && d >= MIN_DURATION) {
                return fail(format!(
                    "mean_duration for type {t} is {d}, must be >= {MIN_DURATION}"
                ));
            }
        }
        if !(self.duration_cv.is_finite() && (0.0..=2.0).contains(&self.duration_cv)) {
            return fail("duration_cv must lie in [0, 2]".into());
        }
        let inf = self.modality_informativeness;
        for (name, v) in [
            ("image", inf.image),
            ("tools", inf.tools),
            ("device", inf.device),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("informativeness of {name} must lie in [0, 1]"));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return fail("noise_sigma must be finite and >= 0".into());
        }
        let ch = self.channels;
        if !(ch.device || ch.tools || ch.image) {
            return fail("at least one channel must be emitted".into());
        }
        if ch.image && self.d_img == 0 {
            return fail("d_img must be >= 1 when images are emitted".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_scaled() {
        let s = SynthSpec::default();
        s.validate().unwrap();
        let mean: f64 = s.type_mix.iter().map(|(t, p)| p * s.mean_duration[t]).sum();
        assert!((mean - 600.0).abs() < 1e-9);
        let ratio = s.mean_duration[&1] / s.mean_duration[&4];
        assert!((ratio - 156.0 / 41.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SynthSpec::default();
        s.type_mix.insert(1, 0.9);
        assert!(s.validate().is_err());
        let mut s = SynthSpec::default();
        s.mean_duration.insert(4, 59.0);
        assert!(s.validate().is_err());
        let mut s = SynthSpec::default();
        s.modality_informativeness.tools = 1.5;
        assert!(s.validate().is_err());
        let mut s = SynthSpec::default();
        s.type_mix = BTreeMap::from([(6, 1.0)]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let s: SynthSpec = serde_json::from_str(r#"{"n_procedures": 8, "seed": 3}"#).unwrap();
        assert_eq!(s.n_procedures, 8);
        assert_eq!(s.phases_per_type, 6);
        assert!(serde_json::from_str::<SynthSpec>(r#"{"bogus": 1}"#).is_err());
    }
}
