//! Online prediction of procedure duration from multimodal 1 Hz sensor
//! streams.

pub mod datamodel;
pub mod estimator;
pub mod evalbench;
pub mod neural;
pub mod synthgen;
