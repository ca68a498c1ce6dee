use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("self-check failed: {}", .0.join("; "))]
    Check(Vec<String>),

    #[error("cannot write {path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, #[source] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Check(_) => 4,
            CliError::Io(..) => 1,
        }
    }
}

impl From<teamvote::Error> for CliError {
    fn from(e: teamvote::Error) -> Self {
        match e {
            teamvote::Error::Solver { .. } => CliError::Solver(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
