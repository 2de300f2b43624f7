use gch_core::GchError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}field `{field}`: {message}", at_line(*.line))]
    Config { line: Option<usize>, field: String, message: String },
    #[error("missing run artifacts: {0}")]
    MissingArtifacts(String),
    #[error("solver windows do not match: {0}")]
    WindowMismatch(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Solver(#[from] GchError),
}

fn at_line(line: Option<usize>) -> String {
    line.map_or(String::new(), |l| format!("line {l}, "))
}

impl CliError {
    pub fn config(line: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { line, field: field.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    /// Name printed on the diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "ConfigError",
            CliError::MissingArtifacts(_) => "MissingArtifacts",
            CliError::WindowMismatch(_) => "WindowMismatch",
            CliError::Io { .. } => "IoError",
            CliError::Solver(e) => e.name(),
        }
    }

    /// 2 for configuration problems, 3 for solver failures, 4 for files.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) | CliError::WindowMismatch(_) => 3,
            CliError::MissingArtifacts(_) | CliError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
