use serde::{Deserialize, Serialize};

use super::signals::{normalize_device, DEVICE_REGISTRY, DEVICE_SIGNALS};
use super::{DataError, ProcedureType};

/// Number of tool-presence entries per frame.
pub const TOOL_COUNT: usize = 12;

/// Default image-feature width for synthetic data.
pub const DEFAULT_D_IMG: usize = 64;

/// Which input channels a record carries. Presence is per record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSet {
    pub device: bool,
    pub tools: bool,
    pub image: bool,
    pub d_img: usize,
}

impl ChannelSet {
    pub fn all(d_img: usize) -> Self {
        Self {
            device: true,
            tools: true,
            image: true,
            d_img,
        }
    }
}

/// One second of device data, kept both in raw units and normalized.
///
/// The raw vector is what gets persisted; the normalized one is what models
/// consume. Keeping both makes save/load an exact identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSample {
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl DeviceSample {
    pub fn from_raw(raw: Vec<f64>) -> Result<Self, DataError> {
        let normalized = normalize_device(&raw, &DEVICE_REGISTRY)?;
        Ok(Self { raw, normalized })
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Seconds since procedure start, starting at 1.
    pub t: usize,
    pub device: Option<DeviceSample>,
    pub tools: Option<Vec<f64>>,
    pub image: Option<Vec<f64>>,
}

impl Frame {
    pub(crate) fn check(&self, channels: &ChannelSet) -> Result<(), DataError> {
        check_presence("device", channels.device, self.device.is_some())?;
        check_presence("tools", channels.tools, self.tools.is_some())?;
        check_presence("img", channels.image, self.image.is_some())?;
        if let Some(device) = &self.device {
            check_width("device", DEVICE_SIGNALS, device.raw.len())?;
        }
        if let Some(tools) = &self.tools {
            check_width("tools", TOOL_COUNT, tools.len())?;
            if let Some(&bad) = tools.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(DataError::ToolOutOfRange(bad));
            }
        }
        if let Some(image) = &self.image {
            check_width("img", channels.d_img, image.len())?;
            if let Some(&bad) = image.iter().find(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    signal: "img".into(),
                    value: bad,
                });
            }
        }
        Ok(())
    }
}

fn check_presence(channel: &'static str, expected: bool, found: bool) -> Result<(), DataError> {
    if expected == found {
        Ok(())
    } else {
        Err(DataError::ChannelPresence { channel, expected })
    }
}

fn check_width(channel: &'static str, expected: usize, found: usize) -> Result<(), DataError> {
    if expected == found {
        Ok(())
    } else {
        Err(DataError::Dimension {
            channel,
            expected,
            found,
        })
    }
}

/// Identifiers double as file-name stems, so they are restricted to a
/// portable character set.
pub fn validate_id(id: &str) -> Result<(), DataError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(DataError::InvalidId(id.to_string()))
    }
}

/// A complete procedure: metadata plus one frame per second.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureRecord {
    id: String,
    ptype: ProcedureType,
    channels: ChannelSet,
    frames: Vec<Frame>,
}

impl ProcedureRecord {
    pub fn new(
        id: impl Into<String>,
        ptype: ProcedureType,
        channels: ChannelSet,
        frames: Vec<Frame>,
    ) -> Result<Self, DataError> {
        let id = id.into();
        validate_id(&id)?;
        if frames.is_empty() {
            return Err(DataError::EmptyRecord(id));
        }
        for (k, frame) in frames.iter().enumerate() {
            if frame.t != k + 1 {
                return Err(DataError::NonConsecutive {
                    expected: k + 1,
                    found: frame.t,
                });
            }
            frame.check(&channels)?;
        }
        Ok(Self {
            id,
            ptype,
            channels,
            frames,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn ptype(&self) -> ProcedureType {
        self.ptype
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// True duration N in seconds.
    pub fn duration(&self) -> usize {
        self.frames.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: usize) -> Frame {
        Frame {
            t,
            device: Some(DeviceSample::from_raw(vec![0.0; DEVICE_SIGNALS]).unwrap()),
            tools: None,
            image: None,
        }
    }

    fn device_only() -> ChannelSet {
        ChannelSet {
            device: true,
            tools: false,
            image: false,
            d_img: 0,
        }
    }

    #[test]
    fn record_requires_consecutive_frames() {
        let ptype = ProcedureType::new(1).unwrap();
        let ok = ProcedureRecord::new("a", ptype, device_only(), vec![frame(1), frame(2)]).unwrap();
        assert_eq!(ok.duration(), 2);
        let err = ProcedureRecord::new("a", ptype, device_only(), vec![frame(1), frame(3)]);
        assert!(matches!(
            err,
            Err(DataError::NonConsecutive {
                expected: 2,
                found: 3
            })
        ));
        assert!(ProcedureRecord::new("a", ptype, device_only(), vec![]).is_err());
        assert!(ProcedureRecord::new("a", ptype, device_only(), vec![frame(0)]).is_err());
    }

    #[test]
    fn record_checks_channel_presence() {
        let ptype = ProcedureType::new(2).unwrap();
        let mut f = frame(1);
        f.tools = Some(vec![0.5; TOOL_COUNT]);
        let err = ProcedureRecord::new("b", ptype, device_only(), vec![f.clone()]).unwrap_err();
        assert!(matches!(
            err,
            DataError::ChannelPresence {
                channel: "tools",
                ..
            }
        ));

        let with_tools = ChannelSet {
            tools: true,
            ..device_only()
        };
        ProcedureRecord::new("b", ptype, with_tools, vec![f.clone()]).unwrap();
        f.tools = Some(vec![1.5; TOOL_COUNT]);
        assert!(ProcedureRecord::new("b", ptype, with_tools, vec![f]).is_err());
    }

    #[test]
    fn ids_are_file_safe() {
        validate_id("proc-0001_a.b").unwrap();
        assert!(validate_id("").is_err());
        assert!(validate_id("../x").is_err());
        assert!(validate_id("a b").is_err());
        assert!(validate_id(".hidden").is_err());
    }
}
