//! Experiments, file formats and the command-line front end for
//! [`flatflow_core`].
//!
//! - [`ini`] and [`config`]: run configuration files.
//! - [`io`]: set dumps (plain or run-length encoded) and CSV tables.
//! - [`experiments`]: the experiment presets, each returning a summary with
//!   one pass/fail row per checked property.
//! - [`calibration`]: empirical barrier constants.
//! - [`run`]: output directory layout used by the CLI.
//! - [`parallel`]: deterministic fan-out over independent runs.

pub mod calibration;
pub mod config;
mod error;
pub mod experiments;
pub mod ini;
pub mod io;
pub mod parallel;
pub mod run;

pub use error::{Error, Result};
