//! From-scratch neural toolkit: dense layers, a GRU cell, sequence
//! forward/backward passes, sigmoid cross-entropy, Adam, and a finite
//! difference gradient checker. All arithmetic is `f64`.

mod adam;
mod dense;
mod gradcheck;
mod gru;
mod loss;
mod matrix;
mod network;

use thiserror::Error;

pub use adam::{AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS};
pub use dense::{sigmoid, Activation, DenseLayer};
pub use gradcheck::{
    compare_with_finite_differences, grad_check, random_sequence, relative_error, GradCheckEntry,
    GradCheckReport, FD_STEP, REL_FLOOR,
};
pub use gru::{GruCell, GruStep, GRU_CONVENTION};
pub use loss::bce_loss;
pub use matrix::Matrix;
pub use network::{Gradients, Network, NetworkShape, SequenceCache};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    Shape {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("empty sequence")]
    EmptySequence,
    #[error("non-finite intermediate value at time step {step}")]
    NonFinite { step: usize },
    #[error("parameter tensor {0} contains non-finite values")]
    NonFiniteParameter(String),
    #[error("network layer dimensions are inconsistent")]
    Inconsistent,
    #[error("cache does not belong to the current parameters")]
    StaleCache,
}
