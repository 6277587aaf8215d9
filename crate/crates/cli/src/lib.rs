//! Configuration-driven experiment runner for `kslab-core`.
//!
//! Every subcommand reads one JSON [`config::ExperimentConfig`], validates it
//! completely, and only then starts computing. Outputs are CSV (17 significant
//! digits), JSON, and gnuplot scripts that reference the CSV columns by name.

// `!(x > 0.0)` also rejects NaN, which is the point of most guards here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod simulate;
pub mod sweep;
pub mod verify;

use std::path::Path;

use serde::Serialize;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Float formatting shared by every CSV writer.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
