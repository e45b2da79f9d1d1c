//! Error categories and their exit statuses.

use std::fmt;

use edg_core::EdgError;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PROBLEM: i32 = 4;
pub const EXIT_SOLVER: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    /// Rendered `--help` or `--version` text; not a failure.
    Help(String),
    Usage(String),
    Io(String),
    Core(EdgError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => EXIT_SUCCESS,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                EdgError::Io(_) => EXIT_IO,
                EdgError::InvalidArgument(_) | EdgError::UnsupportedDegree { .. } => EXIT_USAGE,
                EdgError::InvalidProblem(_) | EdgError::StabilizationCondition { .. } => EXIT_PROBLEM,
                EdgError::CondensationFailure { .. }
                | EdgError::FactorizationFailure(_)
                | EdgError::InvalidComparison(_) => EXIT_SOLVER,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Help(s) => f.write_str(s),
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Io(s) => write!(f, "I/O error: {s}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<EdgError> for CliError {
    fn from(e: EdgError) -> Self {
        CliError::Core(e)
    }
}
