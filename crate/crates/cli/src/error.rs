use excess_agg::AggError;
use serde_json::{json, Value};
use thiserror::Error;

/// Exit status for input, configuration and I/O failures.
pub const EXIT_INPUT: i32 = 2;
/// Exit status when a proved bound is violated.
pub const EXIT_VIOLATION: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    /// A data row of an input CSV; `row` counts data rows from 1, after the header.
    #[error("{path}: row {row}: {message}")]
    Row {
        path: String,
        row: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] AggError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Row { .. } => "csv_row",
            CliError::File { .. } => "csv_file",
            CliError::Config(_) => "config",
            CliError::Core(_) => "invalid_input",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            CliError::Row { path, row, .. } => {
                v["path"] = json!(path);
                v["row"] = json!(row);
                // header is line 1
                v["line"] = json!(row + 1);
            }
            CliError::File { path, .. } => v["path"] = json!(path),
            _ => {}
        }
        v
    }
}
