use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use humap::embed::{project_level, project_subset};
use humap::hierarchy::{build_hierarchy, HierarchyParams};
use humap::persist::{layout_params, save_hierarchy, CONFIG_FILE};
use humap::{DataMatrix, ExecMode, Hierarchy};
use humap_explorer::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(dir: &Path) -> Hierarchy {
    let rows: Vec<Vec<f64>> = (0..240)
        .map(|i| {
            let c = (i % 3) as f64 * 6.0;
            let t = i as f64 * 0.7;
            vec![c + t.sin(), c + (1.3 * t).cos(), (0.37 * t).sin(), (i % 7) as f64 * 0.1]
        })
        .collect();
    let data = DataMatrix::from_rows(&rows).unwrap();
    let params = HierarchyParams { k: 6, seed: 21, ..Default::default() };
    let h = build_hierarchy(&data, &[240, 60, 15], params, ExecMode::Deterministic).unwrap();
    save_hierarchy(&h, dir).unwrap();
    std::fs::write(dir.join(CONFIG_FILE), r#"{"epochs": 30, "mode": "deterministic"}"#).unwrap();
    h
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

/// Poll a job until it finishes; returns the final body and the progress values seen.
async fn wait_job(app: &Router, job_id: &str) -> (Value, Vec<f64>) {
    let mut seen = Vec::new();
    for _ in 0..2000 {
        let (status, body) = call_json(app, "GET", &format!("/jobs/{job_id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        seen.push(body["progress"].as_f64().unwrap());
        if body["status"] != "running" {
            return (body, seen);
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    panic!("job {job_id} did not finish");
}

struct Env {
    _dir: tempfile::TempDir,
    app: Router,
    h: Hierarchy,
    session: String,
}

async fn open(labels: bool) -> Env {
    let dir = tempfile::tempdir().unwrap();
    let h = fixture(dir.path());
    let mut body = json!({ "hierarchy_dir": dir.path() });
    if labels {
        let path = dir.path().join("labels.txt");
        let text: String = std::iter::once("label\n".to_string())
            .chain((0..240).map(|i| format!("c{}\n", i % 3)))
            .collect();
        std::fs::write(&path, text).unwrap();
        body["labels_path"] = json!(path);
    }
    let app = router(Arc::new(AppState::new(None)));
    let (status, resp) = call_json(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{resp}");
    let session = resp["session_id"].as_str().unwrap().to_string();
    Env { _dir: dir, app, h, session }
}

impl Env {
    async fn level(&self, level: usize) -> Value {
        let uri = format!("/sessions/{}/levels/{level}", self.session);
        let (status, body) = call_json(&self.app, "GET", &uri, None).await;
        match status {
            StatusCode::OK => body,
            StatusCode::ACCEPTED => {
                let (done, _) = wait_job(&self.app, body["job_id"].as_str().unwrap()).await;
                assert_eq!(done["status"], "done", "{done}");
                done["payload"].clone()
            }
            other => panic!("unexpected status {other}: {body}"),
        }
    }

    async fn drill(&self, level: usize, ids: &[usize]) -> (StatusCode, Value) {
        let uri = format!("/sessions/{}/drill", self.session);
        call_json(&self.app, "POST", &uri, Some(json!({ "level": level, "landmark_ids": ids }))).await
    }

    async fn drill_payload(&self, level: usize, ids: &[usize]) -> Value {
        let (status, body) = self.drill(level, ids).await;
        match status {
            StatusCode::OK => body,
            StatusCode::ACCEPTED => {
                let (done, _) = wait_job(&self.app, body["job_id"].as_str().unwrap()).await;
                assert_eq!(done["status"], "done", "{done}");
                done["payload"].clone()
            }
            other => panic!("unexpected status {other}: {body}"),
        }
    }
}

fn coords(payload: &Value) -> Vec<f64> {
    payload["coords"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()
}

fn ids(payload: &Value) -> Vec<usize> {
    payload["point_ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn top_level_lifecycle_and_cache_hit() {
    let env = open(false).await;
    let uri = format!("/sessions/{}/levels/2", env.session);
    let (status, body) = call_json(&env.app, "GET", &uri, None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = body["job_id"].as_str().unwrap().to_string();
    let (done, progress) = wait_job(&env.app, &job).await;
    assert_eq!(done["status"], "done");
    assert_eq!(done["progress"], 1.0);
    assert!(progress.windows(2).all(|w| w[0] <= w[1]), "{progress:?}");
    let payload = &done["payload"];
    assert_eq!(ids(payload), (0..15).collect::<Vec<_>>());
    assert_eq!(coords(payload).len(), 30);
    assert!(payload["parent_landmark"].is_null());
    assert!(payload["fixed"].as_array().unwrap().iter().all(|f| f == false));

    let (status, first) = call(&env.app, "GET", &uri, None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = call(&env.app, "GET", &uri, None).await;
    assert_eq!(first, second);
    assert_eq!(serde_json::from_slice::<Value>(&first).unwrap(), *payload);

    // the job keeps reporting the same result
    let (again, _) = wait_job(&env.app, &job).await;
    assert_eq!(again, done);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn payload_matches_direct_projection() {
    let env = open(false).await;
    let bottom = env.level(0).await;
    let params = layout_params(&env.session_dir(), &env.h).unwrap();
    let theta = env.h.params.theta;
    let top = project_level(&env.h, 2, None, theta, &params, None).unwrap();
    let mid = project_level(&env.h, 1, Some(&top), theta, &params, None).unwrap();
    let low = project_level(&env.h, 0, Some(&mid), theta, &params, None).unwrap();
    let direct: Vec<f64> = low.coords.iter().flatten().copied().collect();
    assert_eq!(coords(&bottom), direct);
    let fixed: Vec<bool> = bottom["fixed"].as_array().unwrap().iter().map(|v| v.as_bool().unwrap()).collect();
    assert_eq!(fixed, low.fixed_mask);
    let link = env.h.levels[1].link.as_ref().unwrap();
    let parents: Vec<usize> =
        bottom["parent_landmark"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert_eq!(parents, link.association.landmark_of);

    // one request projected every missing ancestor
    let (_, meta) = call_json(&env.app, "GET", &format!("/sessions/{}/meta", env.session), None).await;
    assert_eq!(meta["projected_levels"], json!([0, 1, 2]));
}

impl Env {
    fn session_dir(&self) -> std::path::PathBuf {
        self._dir.path().to_path_buf()
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn drill_validation() {
    let env = open(false).await;
    let (status, _) = env.drill(1, &[0, 1]).await;
    assert_eq!(status, StatusCode::CONFLICT);
    env.level(2).await;
    assert_eq!(env.drill(1, &[]).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(env.drill(1, &[15]).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(env.drill(2, &[0]).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, body) = env.drill(1, &[0, 99]).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("99"));
    // level 1 is not projected yet, so level 0 cannot be drilled
    assert_eq!(env.drill(0, &[0]).await.0, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn drill_returns_the_preimage() {
    let env = open(false).await;
    env.level(2).await;
    let link = env.h.levels[2].link.as_ref().unwrap();
    for landmark in [0usize, 7, 14] {
        let payload = env.drill_payload(1, &[landmark]).await;
        let expected = link.association.preimage(&[landmark]);
        assert_eq!(ids(&payload), expected);
        assert!(payload["parent_landmark"].as_array().unwrap().iter().all(|v| v == landmark));
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn identical_selections_share_one_job() {
    let env = open(false).await;
    env.level(2).await;
    let (s1, b1) = env.drill(1, &[3, 1, 4]).await;
    let (s2, b2) = env.drill(1, &[4, 3, 1, 1]).await;
    assert_eq!(s1, StatusCode::ACCEPTED);
    if s2 == StatusCode::ACCEPTED {
        assert_eq!(b1["job_id"], b2["job_id"]);
    }
    let (done, _) = wait_job(&env.app, b1["job_id"].as_str().unwrap()).await;
    let (s3, b3) = env.drill(1, &[1, 3, 4]).await;
    assert_eq!(s3, StatusCode::OK);
    assert_eq!(b3, done["payload"]);
    assert_eq!(b3["selection_digest"], done["selection_digest"]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_selection_equals_the_level() {
    let env = open(false).await;
    env.level(2).await;
    let all: Vec<usize> = (0..15).rev().collect();
    let drilled = env.drill_payload(1, &all).await;
    let level = env.level(1).await;
    assert_eq!(drilled, level);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn nested_drill_uses_the_parent_subset() {
    let env = open(false).await;
    env.level(2).await;
    let first = env.drill_payload(1, &[2, 5]).await;
    let digest = first["selection_digest"].as_str().unwrap().to_string();
    let inner: Vec<usize> = ids(&first)[..2].to_vec();
    let uri = format!("/sessions/{}/drill", env.session);
    let req = json!({ "level": 0, "landmark_ids": inner, "parent_digest": digest });
    let (status, body) = call_json(&env.app, "POST", &uri, Some(req)).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    let (done, _) = wait_job(&env.app, body["job_id"].as_str().unwrap()).await;
    let link = env.h.levels[1].link.as_ref().unwrap();
    assert_eq!(ids(&done["payload"]), link.association.preimage(&inner));

    // same computation directly
    let params = layout_params(&env.session_dir(), &env.h).unwrap();
    let theta = env.h.params.theta;
    let top = project_level(&env.h, 2, None, theta, &params, None).unwrap();
    let mid = project_subset(&env.h, 1, &[2, 5], &top, theta, &params, None).unwrap();
    let low = project_subset(&env.h, 0, &inner, &mid, theta, &params, None).unwrap();
    assert_eq!(coords(&done["payload"]), low.coords.iter().flatten().copied().collect::<Vec<_>>());

    // an id outside the parent subset is rejected
    let outside = (0..60).find(|i| !ids(&first).contains(i)).unwrap();
    let req = json!({ "level": 0, "landmark_ids": [outside], "parent_digest": first["selection_digest"] });
    assert_eq!(call(&env.app, "POST", &uri, Some(req)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unknown_resources_are_404() {
    let env = open(false).await;
    assert_eq!(call(&env.app, "GET", "/sessions/nope/levels/0", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&env.app, "GET", "/sessions/nope/meta", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&env.app, "GET", "/jobs/nope", None).await.0, StatusCode::NOT_FOUND);
    let uri = format!("/sessions/{}/levels/3", env.session);
    assert_eq!(call(&env.app, "GET", &uri, None).await.0, StatusCode::NOT_FOUND);
    let missing = json!({ "hierarchy_dir": "/definitely/not/here" });
    assert_eq!(call(&env.app, "POST", "/sessions", Some(missing)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn meta_and_labels() {
    let env = open(true).await;
    let (status, meta) = call_json(&env.app, "GET", &format!("/sessions/{}/meta", env.session), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(meta["level_sizes"], json!([240, 60, 15]));
    assert_eq!(meta["params"]["k"], 6);
    assert_eq!(meta["layout"]["epochs"], 30);
    assert_eq!(meta["has_labels"], true);
    let top = env.level(2).await;
    let global = &env.h.levels[2].global_ids;
    let labels: Vec<String> = top["labels"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().into()).collect();
    let expected: Vec<String> = global.iter().map(|g| format!("c{}", g % 3)).collect();
    assert_eq!(labels, expected);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn bad_labels_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    std::fs::write(dir.path().join("labels.txt"), "a\nb\n").unwrap();
    let app = router(Arc::new(AppState::new(None)));
    let body = json!({ "hierarchy_dir": dir.path(), "labels_path": dir.path().join("labels.txt") });
    assert_eq!(call(&app, "POST", "/sessions", Some(body)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn ui_route_serves_assets_safely() {
    let app = router(Arc::new(AppState::new(None)));
    let (status, body) = call(&app, "GET", "/ui", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("<html"));
    assert_eq!(call(&app, "GET", "/ui/app.js", None).await.0, StatusCode::NOT_FOUND);

    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<html>bundle</html>").unwrap();
    std::fs::create_dir(assets.path().join("js")).unwrap();
    std::fs::write(assets.path().join("js/app.js"), "console.log(1)").unwrap();
    let app = router(Arc::new(AppState::new(Some(assets.path().to_path_buf()))));
    assert_eq!(call(&app, "GET", "/ui/", None).await.1, b"<html>bundle</html>");
    let resp = app.clone().oneshot(Request::get("/ui/js/app.js").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/javascript");
    for bad in ["/ui/../Cargo.toml", "/ui/js/../../secret", "/ui/%2e%2e/x"] {
        assert_eq!(call(&app, "GET", bad, None).await.0, StatusCode::NOT_FOUND, "{bad}");
    }
}
