#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use cobot_energy::RobotModel;
use http_body_util::BodyExt;
use quiz_service::api::Clock;
use quiz_service::{generate_scenes, router, AppState, SceneFile, SessionStore};
use serde_json::Value;
use tower::ServiceExt;

pub const SEED: u64 = 42;

pub fn builtin_models() -> Vec<RobotModel> {
    RobotModel::BUILTINS
        .iter()
        .map(|n| RobotModel::builtin(n).unwrap())
        .collect()
}

pub fn scenes() -> &'static SceneFile {
    static SCENES: OnceLock<SceneFile> = OnceLock::new();
    SCENES.get_or_init(|| generate_scenes(&builtin_models(), SEED).unwrap())
}

/// Starts at 1000 s and advances one second per reading.
pub fn ticking_clock() -> Clock {
    let now = Arc::new(AtomicU64::new(1_000_000));
    Arc::new(move || now.fetch_add(1000, Ordering::SeqCst))
}

pub fn app_with(store: SessionStore) -> Router {
    router(AppState::new(scenes().clone(), store, ticking_clock()), None)
}

pub fn app() -> Router {
    app_with(SessionStore::in_memory(scenes().scenes.len()))
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    if uri.starts_with("/api") {
        assert_eq!(json["schema_version"], 1, "{method} {uri} lacks schema_version: {json}");
    }
    (status, json)
}

pub async fn new_session(app: &Router) -> String {
    let (status, body) = call(app, "POST", "/api/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["session_id"].as_str().unwrap().to_string()
}

pub async fn answer(app: &Router, session: &str, scene_id: &str, choice: usize) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        &format!("/api/sessions/{session}/answers"),
        Some(serde_json::json!({ "scene_id": scene_id, "choice": choice })),
    )
    .await
}

/// Keys that would leak the answer before it is given.
pub fn is_forbidden_key(key: &str) -> bool {
    let k = key.to_ascii_lowercase();
    k.contains("correct")
        || k.contains("energ")
        || k.starts_with("e_")
        || k.starts_with("p_")
        || k == "trace"
        || k == "explanation"
        || k == "theory_text"
}

/// Every forbidden key path and every number equal to a secret value.
pub fn leaks(value: &Value, secrets: &[f64]) -> Vec<String> {
    let mut found = Vec::new();
    walk(value, "$", secrets, &mut found);
    found
}

fn walk(value: &Value, path: &str, secrets: &[f64], found: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let p = format!("{path}.{k}");
                if is_forbidden_key(k) {
                    found.push(p.clone());
                }
                walk(v, &p, secrets, found);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(v, &format!("{path}[{i}]"), secrets, found);
            }
        }
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if secrets.contains(&x) {
                    found.push(format!("{path} = {x}"));
                }
            }
        }
        _ => {}
    }
}

pub fn all_energies() -> Vec<f64> {
    scenes().scenes.iter().flat_map(|s| s.energies()).collect()
}
