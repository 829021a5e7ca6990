//! Device signal registry and normalization.
//!
//! The fourteen signals come from three integrated-OR devices (insufflator,
//! room lights, endoscopic light source and camera). Each has a nominal
//! value range used to scale raw readings into `[0, 1]`.

use super::DataError;

/// Number of device signals in the canonical registry.
pub const DEVICE_SIGNALS: usize = 14;

/// Index of the used-gas-volume signal (monotone over a procedure).
pub const USED_GAS_VOLUME: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub name: &'static str,
    pub kind: SignalKind,
    pub range_min: f64,
    pub range_max: f64,
    pub source_device: &'static str,
}

impl SignalSpec {
    const fn continuous(name: &'static str, device: &'static str, min: f64, max: f64) -> Self {
        Self {
            name,
            kind: SignalKind::Continuous,
            range_min: min,
            range_max: max,
            source_device: device,
        }
    }

    const fn binary(name: &'static str, device: &'static str) -> Self {
        Self {
            name,
            kind: SignalKind::Binary,
            range_min: 0.0,
            range_max: 1.0,
            source_device: device,
        }
    }

    /// Value reported before the first sample of a stream arrives.
    pub fn fill_value(&self) -> f64 {
        match self.kind {
            SignalKind::Continuous => self.range_min,
            SignalKind::Binary => 0.0,
        }
    }

    /// Scales a raw reading into `[0, 1]`.
    ///
    /// Continuous values outside the nominal range are clamped. Binary values
    /// are snapped to 0 or 1 at the 0.5 threshold.
    pub fn normalize(&self, raw: f64) -> Result<f64, DataError> {
        if !raw.is_finite() {
            return Err(DataError::NonFinite {
                signal: self.name.to_string(),
                value: raw,
            });
        }
        Ok(match self.kind {
            SignalKind::Continuous => {
                ((raw - self.range_min) / (self.range_max - self.range_min)).clamp(0.0, 1.0)
            }
            SignalKind::Binary => {
                if raw >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

const INSUFFLATOR: &str = "insufflator";
const OR_LIGHTS: &str = "or_lights";
const ENDO_LIGHT: &str = "endoscopic_light_source";
const ENDO_CAMERA: &str = "endoscopic_camera";

/// The canonical device registry, in channel order.
pub static DEVICE_REGISTRY: [SignalSpec; DEVICE_SIGNALS] = [
    SignalSpec::continuous("insufflator.current_gas_flow_rate", INSUFFLATOR, 0.0, 215.0),
    SignalSpec::continuous("insufflator.target_gas_flow_rate", INSUFFLATOR, 10.0, 300.0),
    SignalSpec::continuous("insufflator.current_gas_pressure", INSUFFLATOR, 0.0, 255.0),
    SignalSpec::continuous("insufflator.target_gas_pressure", INSUFFLATOR, 9.0, 23.0),
    SignalSpec::continuous("insufflator.used_gas_volume", INSUFFLATOR, 0.0, 9501.0),
    SignalSpec::continuous("insufflator.gas_supply_pressure", INSUFFLATOR, 0.0, 760.0),
    SignalSpec::binary("insufflator.device_on", INSUFFLATOR),
    SignalSpec::binary("or_lights.all_lights_off", OR_LIGHTS),
    SignalSpec::continuous("or_lights.intensity_light_1", OR_LIGHTS, 0.0, 100.0),
    SignalSpec::continuous("or_lights.intensity_light_2", OR_LIGHTS, 0.0, 100.0),
    SignalSpec::continuous("endoscopic_light_source.intensity", ENDO_LIGHT, 0.0, 100.0),
    SignalSpec::binary("endoscopic_camera.white_balance", ENDO_CAMERA),
    SignalSpec::continuous("endoscopic_camera.gains", ENDO_CAMERA, 0.0, 3298.0),
    SignalSpec::continuous("endoscopic_camera.exposure_index", ENDO_CAMERA, 0.0, 834.0),
];

/// Position of a signal in the registry, by identifier.
pub fn signal_index(name: &str) -> Option<usize> {
    DEVICE_REGISTRY.iter().position(|s| s.name == name)
}

/// Normalizes one raw device vector against a registry.
pub fn normalize_device(raw: &[f64], registry: &[SignalSpec]) -> Result<Vec<f64>, DataError> {
    if raw.len() != registry.len() {
        return Err(DataError::Dimension {
            channel: "device",
            expected: registry.len(),
            found: raw.len(),
        });
    }
    raw.iter()
        .zip(registry)
        .map(|(&value, spec)| spec.normalize(value))
        .collect()
}
