use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use hine_core::{CatalogError, MediaError, RecordsError};
use hine_imaging::{CodecError, ImagingError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Machine-readable error codes. Each maps to exactly one HTTP status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    Validation,
    InvalidTemplate,
    NotFound,
    NotEligible,
    SessionOpen,
    SessionClosed,
    StaleVersion,
    Conflict,
    NoForeground,
    PayloadTooLarge,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 11] = [
        ErrorCode::Validation,
        ErrorCode::InvalidTemplate,
        ErrorCode::NotFound,
        ErrorCode::NotEligible,
        ErrorCode::SessionOpen,
        ErrorCode::SessionClosed,
        ErrorCode::StaleVersion,
        ErrorCode::Conflict,
        ErrorCode::NoForeground,
        ErrorCode::PayloadTooLarge,
        ErrorCode::Internal,
    ];

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::Validation | ErrorCode::InvalidTemplate => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::NotEligible
            | ErrorCode::SessionOpen
            | ErrorCode::SessionClosed
            | ErrorCode::StaleVersion
            | ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::NoForeground => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::PayloadTooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Validation => "VALIDATION",
            ErrorCode::InvalidTemplate => "INVALID_TEMPLATE",
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::NotEligible => "NOT_ELIGIBLE",
            ErrorCode::SessionOpen => "SESSION_OPEN",
            ErrorCode::SessionClosed => "SESSION_CLOSED",
            ErrorCode::StaleVersion => "STALE_VERSION",
            ErrorCode::Conflict => "CONFLICT",
            ErrorCode::NoForeground => "NO_FOREGROUND",
            ErrorCode::PayloadTooLarge => "PAYLOAD_TOO_LARGE",
            ErrorCode::Internal => "INTERNAL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Validation, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::Internal {
            tracing::error!(message = %self.message, "request failed");
        }
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<RecordsError> for ApiError {
    fn from(e: RecordsError) -> Self {
        let message = e.to_string();
        match e {
            RecordsError::Validation { field, .. } => {
                ApiError::validation(message).with_details(json!({ "field": field }))
            }
            RecordsError::NotFound { kind, id } => {
                ApiError::not_found(message).with_details(json!({ "kind": kind, "id": id }))
            }
            RecordsError::NotEligible {
                requested,
                eligible,
                ..
            } => ApiError::new(ErrorCode::NotEligible, message)
                .with_details(json!({ "requested": requested, "eligible": eligible })),
            RecordsError::SessionOpen { session_id } => {
                ApiError::new(ErrorCode::SessionOpen, message)
                    .with_details(json!({ "session_id": session_id }))
            }
            RecordsError::SessionClosed { session_id } => {
                ApiError::new(ErrorCode::SessionClosed, message)
                    .with_details(json!({ "session_id": session_id }))
            }
            RecordsError::InvalidTemplate {
                item_id,
                template_id,
            } => ApiError::new(ErrorCode::InvalidTemplate, message)
                .with_details(json!({ "item_id": item_id, "template_id": template_id })),
            RecordsError::StaleVersion { expected, actual } => {
                ApiError::new(ErrorCode::StaleVersion, message)
                    .with_details(json!({ "expected": expected, "actual": actual }))
            }
            RecordsError::Conflict(_) => ApiError::new(ErrorCode::Conflict, message),
            RecordsError::Storage(_) => ApiError::internal(message),
        }
    }
}

impl From<MediaError> for ApiError {
    fn from(e: MediaError) -> Self {
        let message = e.to_string();
        match e {
            MediaError::Format(_) | MediaError::Invalid(_) | MediaError::Decoder(_) => {
                ApiError::validation(message)
            }
            MediaError::Dimension { width, height, max } => ApiError::validation(message)
                .with_details(json!({ "width": width, "height": height, "max": max })),
            MediaError::MixedDimensions { index, .. } => {
                ApiError::validation(message).with_details(json!({ "index": index }))
            }
            MediaError::NotFound(_) => ApiError::not_found(message),
            MediaError::IndexOutOfRange { index, count } => ApiError::not_found(message)
                .with_details(json!({ "index": index, "frame_count": count })),
            MediaError::Io(_) => ApiError::internal(message),
        }
    }
}

impl From<ImagingError> for ApiError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::NoForeground => ApiError::new(
                ErrorCode::NoForeground,
                "no region of the frame differs from the near-white background",
            ),
            other => ApiError::validation(other.to_string()),
        }
    }
}

impl From<CodecError> for ApiError {
    fn from(e: CodecError) -> Self {
        ApiError::validation(format!("unreadable image: {e}"))
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        ApiError::validation(e.to_string())
    }
}
