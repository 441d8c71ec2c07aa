use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use hybridcast::ForecastError;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::API_VERSION;

/// An HTTP error with a machine-readable code.
#[derive(Debug, Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    /// Index of the offending pipeline step, when relevant.
    pub step: Option<usize>,
    /// Per-model causes for aggregated failures.
    pub causes: Vec<(String, String)>,
}

#[derive(Debug, Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    causes: Vec<serde_json::Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            step: None,
            causes: Vec::new(),
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("{what} '{id}' does not exist"),
        )
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = Some(step);
        self
    }

    /// Maps an engine error onto a status, keeping its code.
    pub fn from_engine(status: StatusCode, e: &ForecastError) -> Self {
        let mut err = Self::new(status, e.code(), e.to_string());
        if let ForecastError::Comparison(c) | ForecastError::SearchFailure(c) = e {
            err.causes = c.clone();
        }
        err
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::internal(format!("storage error: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: &self.code,
            message: &self.message,
            step: self.step,
            causes: self
                .causes
                .iter()
                .map(|(model, cause)| json!({"model": model, "error": cause}))
                .collect(),
        };
        (
            self.status,
            Json(json!({"api_version": API_VERSION, "error": body})),
        )
            .into_response()
    }
}
