//! Conversion of irregular device event streams into 1 Hz samples.
//!
//! Each second `t` takes the latest value whose timestamp is `<= t`. Faster
//! streams therefore keep only their most recent value per second, and slower
//! streams hold their last value until a new one arrives.

use super::signals::SignalSpec;
use super::{DataError, DeviceSample};

#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub signal: String,
    pub timestamp: f64,
    pub value: f64,
}

impl RawEvent {
    pub fn new(signal: impl Into<String>, timestamp: f64, value: f64) -> Self {
        Self {
            signal: signal.into(),
            timestamp,
            value,
        }
    }
}

/// Resamples events onto seconds `1..=horizon`.
///
/// Returns one sequence per registry entry, each of length `horizon`, in raw
/// signal units. Seconds before a signal's first event carry its fill value.
pub fn resample_to_1hz(
    events: &[RawEvent],
    horizon: usize,
    registry: &[SignalSpec],
) -> Result<Vec<Vec<f64>>, DataError> {
    if horizon == 0 {
        return Err(DataError::ZeroHorizon);
    }
    let mut streams: Vec<Vec<(f64, f64)>> = vec![Vec::new(); registry.len()];
    for event in events {
        let k = registry
            .iter()
            .position(|s| s.name == event.signal)
            .ok_or_else(|| DataError::UnknownSignal(event.signal.clone()))?;
        if !event.timestamp.is_finite() || !event.value.is_finite() {
            return Err(DataError::NonFinite {
                signal: event.signal.clone(),
                value: if event.value.is_finite() {
                    event.timestamp
                } else {
                    event.value
                },
            });
        }
        if let Some(&(last, _)) = streams[k].last() {
            if event.timestamp < last {
                return Err(DataError::UnsortedEvents {
                    signal: event.signal.clone(),
                    timestamp: event.timestamp,
                });
            }
        }
        streams[k].push((event.timestamp, event.value));
    }

    Ok(streams
        .iter()
        .zip(registry)
        .map(|(stream, spec)| {
            let mut out = Vec::with_capacity(horizon);
            let mut current = spec.fill_value();
            let mut next = 0;
            for t in 1..=horizon {
                while next < stream.len() && stream[next].0 <= t as f64 {
                    current = stream[next].1;
                    next += 1;
                }
                out.push(current);
            }
            out
        })
        .collect())
}

/// Resamples a device event log and packs it into per-second samples.
pub fn device_samples(
    events: &[RawEvent],
    horizon: usize,
    registry: &[SignalSpec],
) -> Result<Vec<DeviceSample>, DataError> {
    let per_signal = resample_to_1hz(events, horizon, registry)?;
    (0..horizon)
        .map(|t| DeviceSample::from_raw(per_signal.iter().map(|s| s[t]).collect()))
        .collect()
}
