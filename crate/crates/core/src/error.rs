use thiserror::Error;

/// Errors raised anywhere in the hierarchy pipeline.
#[derive(Debug, Error)]
pub enum HumapError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("row {row} has zero total weight")]
    DegenerateRow { row: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("point {point} could not be associated with any landmark")]
    UnassociatedPoint { point: usize },
    #[error("level {level} cannot be projected before level {required}")]
    Ordering { level: usize, required: usize },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HumapError> = std::result::Result<T, E>;

impl HumapError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        HumapError::Parameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        HumapError::Input(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        HumapError::Format(msg.into())
    }
}
