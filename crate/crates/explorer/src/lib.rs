//! Local HTTP service for exploring a stored hierarchy: level embeddings,
//! drill-down projections run as background jobs, and the `/ui` assets.

mod api;
mod error;
mod state;
mod ui;

use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

pub use error::ApiError;
pub use state::{AppState, CacheKey, Job, JobStatus, LevelResponse, Ready, Session};

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(api::create_session))
        .route("/sessions/{id}/meta", get(api::meta))
        .route("/sessions/{id}/levels/{level}", get(api::level))
        .route("/sessions/{id}/drill", post(api::drill))
        .route("/jobs/{id}", get(api::job))
        .route("/ui", get(ui::index))
        .route("/ui/", get(ui::index))
        .route("/ui/{*path}", get(ui::asset))
        .with_state(state)
}

/// Serve on an already bound listener until the process is stopped.
pub async fn serve(listener: TcpListener, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(AppState::new(ui_dir)))).await
}
