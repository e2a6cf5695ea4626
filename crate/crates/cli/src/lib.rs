//! Configuration, file formats and the `simulate`, `invert` and `study`
//! commands of the `heat-inverse` tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod series;

pub use commands::{invert_file, simulate, study, Provenance};
pub use config::{ExperimentConfig, LoadedConfig, Overrides, Source};
pub use error::{CliError, Result};
