//! Error type shared by every forecasting module.

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, ForecastError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ForecastError {
    /// A CSV row could not be turned into an observation. Rows are 1-based data rows.
    #[error("ingest error at row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("irregular series: {0}")]
    IrregularSeries(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("impute error: {0}")]
    Impute(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error at index {index}: {message}")]
    Domain { index: usize, message: String },

    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    /// Every combination in a grid search failed; each entry is `(label, cause)`.
    #[error("search failed: all {} combinations failed", .0.len())]
    SearchFailure(Vec<(String, String)>),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("comparison failed: {}", summarize(.0))]
    Comparison(Vec<(String, String)>),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

fn summarize(causes: &[(String, String)]) -> String {
    causes
        .iter()
        .map(|(label, cause)| format!("{label}: {cause}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl ForecastError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ForecastError::InvalidArgument(msg.into())
    }

    /// Machine-readable short code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            ForecastError::Ingest { .. } => "ingest_error",
            ForecastError::TooShort { .. } => "too_short",
            ForecastError::IrregularSeries(_) => "irregular_series",
            ForecastError::Split(_) => "split_error",
            ForecastError::Impute(_) => "impute_error",
            ForecastError::InvalidArgument(_) => "invalid_argument",
            ForecastError::Domain { .. } => "domain_error",
            ForecastError::DegenerateRange(_) => "degenerate_range",
            ForecastError::Numerical(_) => "numerical_error",
            ForecastError::Data(_) => "data_error",
            ForecastError::FitFailure(_) => "fit_failure",
            ForecastError::SearchFailure(_) => "search_failure",
            ForecastError::Selection(_) => "selection_error",
            ForecastError::Comparison(_) => "comparison_error",
            ForecastError::Divergence { .. } => "divergence",
            ForecastError::Config(_) => "configuration_error",
            ForecastError::Serialization(_) => "serialization_error",
        }
    }
}

impl From<serde_json::Error> for ForecastError {
    fn from(e: serde_json::Error) -> Self {
        ForecastError::Serialization(e.to_string())
    }
}
