//! Procedure records, device signals, ingestion and the dataset file format.

mod io;
mod ptype;
mod record;
mod resample;
mod signals;

use std::path::PathBuf;

use thiserror::Error;

pub use io::{
    load_dataset, load_record, parse_frame, parse_header, record_file_name, save_dataset,
    write_record, RecordHeader, FORMAT_VERSION, RECORD_EXTENSION,
};
pub use ptype::{ProcedureType, PROCEDURE_TYPES, REFERENCE_COUNTS, REFERENCE_MINUTES};
pub use record::{
    validate_id, ChannelSet, DeviceSample, Frame, ProcedureRecord, DEFAULT_D_IMG, TOOL_COUNT,
};
pub use resample::{device_samples, resample_to_1hz, RawEvent};
pub use signals::{
    normalize_device, signal_index, SignalKind, SignalSpec, DEVICE_REGISTRY, DEVICE_SIGNALS,
    USED_GAS_VOLUME,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("non-finite value {value} for {signal}")]
    NonFinite { signal: String, value: f64 },
    #[error("{channel} has {found} values, expected {expected}")]
    Dimension {
        channel: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("procedure type {0} outside 1..=5")]
    InvalidProcedureType(i64),
    #[error("tool presence value {0} outside [0, 1]")]
    ToolOutOfRange(f64),
    #[error("channel {channel} {}", if *.expected { "missing" } else { "present but not declared" })]
    ChannelPresence {
        channel: &'static str,
        expected: bool,
    },
    #[error("invalid procedure id {0:?}")]
    InvalidId(String),
    #[error("procedure {0} has no frames")]
    EmptyRecord(String),
    #[error("non-consecutive frame: expected t = {expected}, found t = {found}")]
    NonConsecutive { expected: usize, found: usize },
    #[error("resampling horizon must be at least 1 second")]
    ZeroHorizon,
    #[error("unknown signal identifier {0:?}")]
    UnknownSignal(String),
    #[error("events for {signal} are not sorted (timestamp {timestamp} goes backwards)")]
    UnsortedEvents { signal: String, timestamp: f64 },
    #[error("{}:{line}: {reason}", .file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
