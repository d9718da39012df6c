//! Experiment runner for the counterfactual bit commitment simulator.
//!
//! Each subcommand builds a report struct; [`commands::execute`] renders it
//! as JSON (with a `schema_version` field) or CSV. Reports carry no
//! timestamps, so identical settings give identical bytes.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{execute, Command, Rendered};
pub use config::Settings;
pub use error::CliError;
