//! Phase-structured synthetic procedures with retained ground truth.
//!
//! Device channels carry coarse progress (stage-dependent levels and a
//! monotone insufflated volume with an unknown per-procedure scale); tool
//! and image channels carry the identity of the hidden phase.

mod generate;
mod proxy;
mod spec;
mod trace;

use thiserror::Error;

use crate::datamodel::DataError;

pub use generate::{generate, SynthOutput};
pub use proxy::{modality_correlation, Modality};
pub use spec::{EmittedChannels, Informativeness, SynthSpec, DEFAULT_MEAN_SECONDS, MIN_DURATION};
pub use trace::{
    load_trace, oracle_progress, save_synthetic, OracleProgress, PhaseRun, ProcedureTrace,
    SynthTrace, TRACE_FILE_NAME, TRACE_VERSION,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("record {0} was not produced by this generator trace")]
    ForeignRecord(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}
