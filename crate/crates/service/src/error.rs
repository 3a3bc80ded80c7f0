use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use odcl_core::analytics::AnalyticsError;
use odcl_core::index::IndexError;
use odcl_core::MindmapError;

/// JSON error body: `{"error": code, "message": text, "current_revision": n?}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_revision: Option<u64>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error: code.into(), message: message.into(), current_revision: None } }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::UnknownCluster { .. } => Self::new(StatusCode::BAD_REQUEST, "unknown_cluster", e.to_string()),
            IndexError::UnknownPost(_) => Self::not_found(e.to_string()),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "index", e.to_string()),
        }
    }
}

impl From<MindmapError> for ApiError {
    fn from(e: MindmapError) -> Self {
        let msg = e.to_string();
        match e {
            MindmapError::NotFound(_) | MindmapError::MapNotFound(_) => Self::not_found(msg),
            MindmapError::MapExists(_) => Self::new(StatusCode::CONFLICT, "map_exists", msg),
            MindmapError::Conflict { current, .. } => {
                let mut err = Self::new(StatusCode::CONFLICT, "revision_conflict", msg);
                err.body.current_revision = Some(current);
                err
            }
            MindmapError::StaleLink { .. } => Self::new(StatusCode::GONE, "stale_link", msg),
            MindmapError::NoLink(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "no_link", msg),
            MindmapError::Cycle { .. } | MindmapError::RootImmutable(_) | MindmapError::Policy(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_edit", msg)
            }
            MindmapError::Import { .. } => Self::new(StatusCode::BAD_REQUEST, "invalid_document", msg),
            MindmapError::Io(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        let code = match e {
            AnalyticsError::OutOfOrder { .. } => "out_of_order",
            AnalyticsError::WrongSession { .. } => "wrong_session",
            AnalyticsError::MissingSubject { .. } => "missing_subject",
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}
