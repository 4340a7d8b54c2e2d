//! Command-line front end: scenario files, the `plan`, `run`, `sweep` and
//! `calibrate` commands, and the report files they write.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod units;

pub use config::{parse_config, parse_config_str, ResolvedConfig, ScenarioConfig, Source};
pub use error::CliError;
