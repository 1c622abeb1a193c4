//! Static assets for the browser explorer.

use std::path::{Component, Path as FsPath};
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};

use crate::state::AppState;

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>humap explorer</title></head>
<body>
<h1>humap explorer</h1>
<p>No UI bundle is installed. Start the service with <code>--ui-dir</code> pointing at a built bundle,
or use the JSON API under <code>/sessions</code> and <code>/jobs</code>.</p>
</body></html>
";

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

fn serve(state: &AppState, rel: &str) -> Response {
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let path = FsPath::new(rel);
    if !path.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    if let Some(dir) = &state.ui_dir {
        if let Ok(bytes) = std::fs::read(dir.join(path)) {
            return ([(header::CONTENT_TYPE, content_type(path))], bytes).into_response();
        }
    }
    if rel == "index.html" {
        return ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], PLACEHOLDER).into_response();
    }
    StatusCode::NOT_FOUND.into_response()
}

pub async fn index(State(state): State<Arc<AppState>>) -> Response {
    serve(&state, "")
}

pub async fn asset(State(state): State<Arc<AppState>>, Path(path): Path<String>) -> Response {
    serve(&state, &path)
}
