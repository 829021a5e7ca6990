use std::fmt;

use procdur::datamodel::DataError;
use procdur::estimator::EstimatorError;
use procdur::evalbench::EvalError;
use procdur::neural::NeuralError;
use procdur::synthgen::SynthError;

/// A failure reported as one JSON line on stderr: `{"error": kind, "message": ...}`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

fn data_kind(e: &DataError) -> &'static str {
    match e {
        DataError::Io { .. } => "io",
        DataError::Parse { .. } => "parse",
        _ => "data",
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::new(data_kind(&e), e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        let kind = match &e {
            EstimatorError::InvalidConfig(_) => "config",
            EstimatorError::MissingChannel { .. } | EstimatorError::ImageWidth { .. } => {
                "channel_mismatch"
            }
            EstimatorError::LabelRange { .. } => "label",
            EstimatorError::OutOfOrder { .. } => "out_of_order",
            EstimatorError::NonFiniteLoss { .. } => "non_finite_loss",
            EstimatorError::Version { .. } => "checkpoint_version",
            EstimatorError::Corrupt(_) => "checkpoint_corrupt",
            EstimatorError::Io { .. } => "io",
            EstimatorError::Neural(_) => "numeric",
            EstimatorError::Data(d) => data_kind(d),
        };
        Self::new(kind, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Estimator(inner) => inner.into(),
            other => Self::new("eval", other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => Self::new("config", e.to_string()),
            SynthError::Io { .. } => Self::new("io", e.to_string()),
            SynthError::Data(d) => d.into(),
            other => Self::new("synth", other.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        Self::new("numeric", e.to_string())
    }
}
