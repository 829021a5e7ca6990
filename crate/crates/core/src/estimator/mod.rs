//! Fusion network variants, progress labels, training, streaming inference
//! and checkpoints.

mod checkpoint;
mod config;
mod gradsuite;
mod model;
mod progress;
mod session;
mod train;

use thiserror::Error;

use crate::datamodel::DataError;
use crate::neural::NeuralError;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
};
pub use config::{FusionConfig, Preset, Variant, DEFAULT_EPSILON_PROGRESS};
pub use gradsuite::{gradient_check_suite, suite_config, GradCheckCase};
pub use model::{assemble_input, build_model, raw_input, record_inputs, Model};
pub use progress::{duration_from_progress, progress_label, PredictionPoint};
pub use session::{open_session, Session};
pub use train::{train, train_with_progress, TrainingLog};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{record}: channel {channel} is required by the model but absent")]
    MissingChannel {
        record: String,
        channel: &'static str,
    },
    #[error("{record}: image features have width {found}, model expects {expected}")]
    ImageWidth {
        record: String,
        expected: usize,
        found: usize,
    },
    #[error("label index {i} outside 1..={n}")]
    LabelRange { i: usize, n: usize },
    #[error("frame out of order: expected t={expected}, got t={found}")]
    OutOfOrder { expected: usize, found: usize },
    #[error("non-finite loss in epoch {epoch} on procedure {procedure}")]
    NonFiniteLoss { epoch: usize, procedure: String },
    #[error("unsupported checkpoint format version {found} (supported: {supported})")]
    Version { found: u64, supported: u64 },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Data(#[from] DataError),
}
