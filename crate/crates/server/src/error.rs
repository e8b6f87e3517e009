use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use artlens_core::catalog::CatalogError;
use artlens_core::explore::SessionError;

/// Error response: `{"error": {"code": "...", "message": "..."}}`. Codes
/// are stable; messages are for humans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body { error: Inner { code: self.code, message: &self.message } };
        (self.status, Json(body)).into_response()
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let msg = e.to_string();
        match e {
            CatalogError::UnknownCategory(_) => Self::bad_request("unknown_category", msg),
            CatalogError::UnknownLabel(_) => Self::bad_request("unknown_label", msg),
            CatalogError::LabelCategoryMismatch { .. } => Self::bad_request("label_category_mismatch", msg),
            CatalogError::InvalidCursor => Self::bad_request("invalid_cursor", msg),
            CatalogError::InvalidPageSize => Self::bad_request("invalid_page_size", msg),
            CatalogError::UnknownArtwork(_) => Self::not_found("painting_not_found", msg),
            CatalogError::UnknownDetection(_) => Self::not_found("object_not_found", msg),
            CatalogError::MissingCrop(_) => Self::not_found("crop_not_found", msg),
            _ => Self::internal(msg),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::UnknownSession(_) => Self::not_found("session_not_found", e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}
