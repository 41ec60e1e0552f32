//! Measurement precision and disturbance quantities for quantum measurement
//! models, computed exactly from operators and reconstructed from simulated
//! weak-measurement statistics.

mod ddouble;
pub mod error;
pub mod cli;
pub mod experiment;
pub mod mdr_theory;
pub mod qmath;
pub mod qmodel;
pub mod random;
pub mod verify;

pub use error::{Error, Result};
