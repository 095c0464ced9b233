//! Command-line driver for the null-form toolkit: tensor classification,
//! nonlinear wave runs with energy diagnostics, and the verification suite.
//!
//! The library half exists so integration tests can call the same entry
//! points the binary dispatches to; the binary is a thin argument parser.

pub mod commands;
pub mod config;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig, TensorSource};
