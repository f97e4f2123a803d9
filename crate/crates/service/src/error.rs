use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};
use vizgen_core::difftree::DiffError;
use vizgen_core::sql::ParseError;

/// JSON error body `{code, message, detail}`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn unknown_dataset(name: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_dataset",
            format!("no dataset named `{name}`"),
        )
        .with_detail(json!({ "dataset": name }))
    }

    pub fn unknown_version(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_version",
            format!("no interface version `{id}`"),
        )
        .with_detail(json!({ "version_id": id }))
    }

    /// Parse failure of the `index`-th query of a request.
    pub fn parse(index: usize, e: &ParseError) -> Self {
        let mut detail = json!({ "query": index });
        if let Some((line, column)) = e.position() {
            detail["line"] = json!(line);
            detail["column"] = json!(column);
        }
        match e {
            ParseError::Unsupported { feature, .. } => {
                detail["feature"] = json!(feature);
                Self::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "unsupported_feature",
                    e.to_string(),
                )
                .with_detail(detail)
            }
            _ => {
                Self::new(StatusCode::BAD_REQUEST, "parse_error", e.to_string()).with_detail(detail)
            }
        }
    }

    pub fn binding(e: &DiffError) -> Self {
        let code = match e {
            DiffError::IncompleteBinding(_) => "incomplete_binding",
            DiffError::Query(_) => "query_error",
            _ => "invalid_binding",
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code,
            message: self.message.clone(),
            detail: self.detail.clone(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}
