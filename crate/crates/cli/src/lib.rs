//! Command-line harness around `qdo_core`: report formats, SVG charts and the
//! subcommand implementations behind the `qdo` binary.

pub mod chart;
pub mod commands;
pub mod report;

pub use commands::{CliError, CommandOutput, RunConfig, RunRequest, DEFAULT_SEED};
pub use report::{Group, Report};
