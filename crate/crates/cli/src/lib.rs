//! Scenario ingestion, command orchestration and report writing for the
//! `spares` binary.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use commands::{cmd_analyze, cmd_optimize, cmd_simulate, cmd_validate, Overrides};
pub use error::{CliError, Result};
pub use report::{OutputFormat, ReportBundle};
pub use scenario::{Scenario, Strategy};
