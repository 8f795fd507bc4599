//! Config parsing, report emission and the commands behind the `focklab` binary.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, CliError, Command, Failure, Output};
pub use config::{emit_config, parse_config, Config, ConfigErrors, ProductSpec};
pub use report::{emit_report, to_json, Format, CSV_COLUMNS};
