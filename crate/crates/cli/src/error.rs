use std::io;
use std::path::Path;

/// Failure classes of the command line, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<aft_core::Error> for CliError {
    fn from(e: aft_core::Error) -> Self {
        use aft_core::Error as E;
        match e {
            E::Config(_) | E::Simplex(_) => CliError::Config(e.to_string()),
            E::NonFinite(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Wraps an IO error with the path it concerns.
pub fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

pub fn json_at(path: &Path) -> impl FnOnce(serde_json::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

pub fn csv_at(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}
