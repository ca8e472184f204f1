//! Batch driver for the `torus-restrict` sweeps.
//!
//! Each experiment turns a validated [`ExperimentConfig`] into a [`Table`]
//! with a fixed column set, rendered as CSV or JSON. Output bytes depend
//! only on the configuration and seed, not on the thread count.

pub mod config;
pub mod experiments;
pub mod output;

use std::io::Write;

pub use config::{Diagnostic, Experiment, ExperimentConfig, Format};
pub use output::{Cell, Table};

/// Table in the configured format.
pub fn render(config: &ExperimentConfig, table: &Table) -> String {
    match config.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

/// Runs the experiment and writes the result to `config.out`, or to stdout
/// when no path is set.
pub fn execute(config: &ExperimentConfig) -> std::io::Result<Table> {
    let table = experiments::run(config)?;
    let text = render(config, &table);
    match &config.out {
        Some(path) => output::write_atomic(path, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(table)
}
