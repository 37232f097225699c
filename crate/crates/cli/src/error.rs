use serde_json::{json, Value};
use thiserror::Error;
use uqd_core::UqError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] UqError),
    #[error("{path}: schema mismatch at column `{column}`: {detail}")]
    SchemaMismatch {
        path: String,
        column: String,
        detail: String,
    },
    /// `row` counts data rows from 1 (the header is not a row).
    #[error("{path}: non-finite value in column `{column}` at row {row}")]
    NonFiniteValue { path: String, row: usize, column: String },
    #[error("{path}: cannot parse `{value}` in column `{column}` at row {row}")]
    InvalidValue {
        path: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// 0 success, 1 I/O failure, 2 validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::SchemaMismatch { .. } => "SchemaMismatch",
            CliError::NonFiniteValue { .. } => "NonFiniteValue",
            CliError::InvalidValue { .. } => "InvalidValue",
            CliError::Config(_) => "InvalidConfig",
            CliError::Io { .. } => "IoError",
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        let extra = match self {
            CliError::SchemaMismatch { column, .. } => json!({ "column": column }),
            CliError::NonFiniteValue { row, column, .. } | CliError::InvalidValue { row, column, .. } => {
                json!({ "row": row, "column": column })
            }
            _ => Value::Null,
        };
        if let (Value::Object(o), Value::Object(e)) = (&mut obj, extra) {
            o.extend(e);
        }
        json!({ "error": obj })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
