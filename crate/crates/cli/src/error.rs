use std::fmt;

use humap::HumapError;

/// A failure reported as one JSON line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit: u8,
    pub message: String,
}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

impl CliError {
    pub fn validation(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, exit: EXIT_VALIDATION, message: message.into() }
    }

    pub fn io(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, exit: EXIT_IO, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { code: "internal", exit: EXIT_INTERNAL, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "code": self.code, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<HumapError> for CliError {
    fn from(e: HumapError) -> Self {
        let message = match &e {
            HumapError::Parameter(m) | HumapError::Input(m) | HumapError::Degenerate(m) => m.clone(),
            HumapError::UndefinedMetric(m) | HumapError::Format(m) => m.clone(),
            other => other.to_string(),
        };
        let (code, exit) = match e {
            HumapError::Parameter(_) => ("invalid_parameter", EXIT_VALIDATION),
            HumapError::Input(_) => ("invalid_input", EXIT_VALIDATION),
            HumapError::DegenerateRow { .. } | HumapError::Degenerate(_) => ("degenerate_input", EXIT_VALIDATION),
            HumapError::UnassociatedPoint { .. } => ("unassociated_point", EXIT_VALIDATION),
            HumapError::Ordering { .. } => ("ordering", EXIT_VALIDATION),
            HumapError::UndefinedMetric(_) => ("undefined_metric", EXIT_VALIDATION),
            HumapError::Format(_) => ("malformed_data", EXIT_IO),
            HumapError::Io(_) => ("io", EXIT_IO),
        };
        CliError { code, exit, message }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io("io", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
