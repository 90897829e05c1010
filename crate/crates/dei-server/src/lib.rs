//! The DEI scoring service: an axum router exposing corpus validation, diff
//! rendering, committee scoring (as polled jobs), reranking, and diversity
//! metrics over HTTP/JSON.

mod handlers;
mod jobs;

use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use dei_api::ApiError;
use dei_core::error::{ErrorKind, PipelineError};

pub use jobs::JobStore;

/// Shared server state.
#[derive(Clone, Default)]
pub struct AppState {
    pub jobs: Arc<JobStore>,
}

/// Inline corpus payloads can be large; accept up to this many bytes.
const MAX_BODY_BYTES: usize = 256 * 1024 * 1024;

/// Builds the service router.
pub fn router() -> Router {
    Router::new()
        .route("/api/v1/health", get(handlers::health))
        .route("/api/v1/corpus/validate", post(handlers::validate))
        .route("/api/v1/corpus/synthetic", post(handlers::synthetic_corpus))
        .route("/api/v1/diff/render", post(handlers::render))
        .route("/api/v1/matrix/synthetic", post(handlers::synthetic_matrix))
        .route("/api/v1/metrics", post(handlers::metrics))
        .route("/api/v1/score", post(handlers::score_submit))
        .route("/api/v1/jobs/{id}", get(handlers::job_status))
        .route("/api/v1/jobs/{id}/ledger", get(handlers::job_ledger))
        .route("/api/v1/rerank", post(handlers::rerank))
        .route("/api/v1/sweep", post(handlers::sweep))
        .route("/api/v1/report", post(handlers::report))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(AppState::default())
}

/// Serves the router on an already-bound listener until the task is aborted.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let addr = listener.local_addr()?;
    tracing::info!("dei server listening on http://{addr}");
    axum::serve(listener, router()).await
}

/// Server-side error with the pipeline's validation/transport/internal
/// classification mapped onto HTTP statuses.
#[derive(Debug)]
pub struct ServerError {
    pub kind: ErrorKind,
    pub message: String,
}

impl ServerError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for ServerError {
    fn from(err: PipelineError) -> Self {
        Self {
            kind: err.kind(),
            message: err.to_string(),
        }
    }
}

impl IntoResponse for ServerError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::Validation => StatusCode::BAD_REQUEST,
            ErrorKind::Transport => StatusCode::BAD_GATEWAY,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = Json(ApiError {
            kind: self.kind.as_str().to_string(),
            message: self.message,
        });
        (status, body).into_response()
    }
}
