use thiserror::Error;

pub type Result<T> = std::result::Result<T, HistoriesError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoriesError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("outcome index {index} out of range for time position {position} ({outcomes} outcomes)")]
    IndexOutOfRange {
        position: usize,
        index: usize,
        outcomes: usize,
    },

    #[error("time range {start}..{end} lies outside the grid of {len} times")]
    RangeOutsideGrid { start: usize, end: usize, len: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("conditioning segment {segment} has measure {measure:e}, not above tolerance")]
    ZeroMeasureCondition { segment: String, measure: f64 },

    #[error("numerical integrity: {quantity} = {value:e} lies outside [0, 1] beyond tolerance")]
    NumericalIntegrity { quantity: String, value: f64 },

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),
}

impl HistoriesError {
    pub(crate) fn dimension(expected: impl ToString, found: impl ToString) -> Self {
        HistoriesError::Dimension {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for errors caused by exceeding a size budget rather than by bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, HistoriesError::Budget(_))
    }
}
