//! JSON endpoints.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::json;
use serde_json::value::RawValue;

use crate::error::ApiError;
use crate::state::{AppState, JobStatus, LevelResponse, Ready};

type Shared = State<Arc<AppState>>;

fn payload_response(ready: &Ready) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], ready.body.get().to_owned()).into_response()
}

fn level_response(r: LevelResponse) -> Response {
    match r {
        LevelResponse::Ready(ready) => payload_response(&ready),
        LevelResponse::Pending(job_id) => {
            (StatusCode::ACCEPTED, Json(json!({ "job_id": job_id, "status": JobStatus::Running }))).into_response()
        }
    }
}

#[derive(Deserialize)]
pub struct OpenSession {
    hierarchy_dir: PathBuf,
    #[serde(default)]
    labels_path: Option<PathBuf>,
}

pub async fn create_session(State(state): Shared, Json(req): Json<OpenSession>) -> Result<Response, ApiError> {
    let st = state.clone();
    let session = tokio::task::spawn_blocking(move || st.open_session(&req.hierarchy_dir, req.labels_path.as_deref()))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let body = json!({
        "session_id": session.id,
        "level_sizes": session.hierarchy.level_sizes(),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

pub async fn meta(State(state): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let body = json!({
        "session_id": s.id,
        "hierarchy_dir": s.dir,
        "n_levels": s.hierarchy.n_levels(),
        "level_sizes": s.hierarchy.level_sizes(),
        "params": s.hierarchy.params,
        "layout": {
            "seed": s.layout.seed,
            "epochs": s.layout.n_epochs,
            "mode": s.layout.mode,
        },
        "has_labels": s.labels.is_some(),
        "projected_levels": s.cached_levels(),
    });
    Ok(Json(body).into_response())
}

pub async fn level(State(state): Shared, Path((id, level)): Path<(String, usize)>) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    state.request_level(&s, level).map(level_response)
}

#[derive(Deserialize)]
pub struct Drill {
    level: usize,
    landmark_ids: Vec<usize>,
    #[serde(default)]
    parent_digest: Option<String>,
}

pub async fn drill(State(state): Shared, Path(id): Path<String>, Json(req): Json<Drill>) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    state.request_drill(&s, req.level, &req.landmark_ids, req.parent_digest).map(level_response)
}

#[derive(Serialize)]
struct JobBody<'a> {
    job_id: &'a str,
    status: JobStatus,
    progress: f64,
    level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection_digest: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload: Option<&'a RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub async fn job(State(state): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state.job(&id)?;
    let (status, ready, error) = job.status();
    let body = JobBody {
        job_id: &job.id,
        status,
        progress: job.progress(),
        level: job.key.0,
        selection_digest: job.key.1.as_deref(),
        payload: ready.as_ref().map(|r| &*r.body),
        error,
    };
    Ok(Json(body).into_response())
}
