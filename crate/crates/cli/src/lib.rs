//! Command-line front end: configuration, report writing and exit statuses.

pub mod config;
pub mod exit;
pub mod run;

pub use config::{parse_config, ApproachChoice, OutputFormat, RunConfig};
pub use exit::CliError;
pub use run::run;
