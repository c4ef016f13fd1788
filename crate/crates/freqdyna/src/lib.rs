//! Experiment harness for `freqdyna-core`: configuration, per-run metric
//! files, aggregate statistics, the spectral verification report and the
//! `freqdyna` command line.

pub mod config;
mod error;
pub mod formats;
pub mod harness;
pub mod stats;
pub mod verify;

pub use error::{HarnessError, Result};
pub use freqdyna_core as core;
