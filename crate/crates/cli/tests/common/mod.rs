#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use minerec_cli::{router, AppState, ServiceConfig, Store};
use serde_json::Value;
use tower::ServiceExt;

use minerec_core::corpus::{build_corpus, train_bundle, GeneratorConfig};
use minerec_core::learner::{FitParams, ModelBundle};

pub fn sample_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/orders.xes")
}

pub fn sample_bytes() -> Vec<u8> {
    std::fs::read(sample_path()).unwrap()
}

pub fn small_config() -> GeneratorConfig {
    GeneratorConfig {
        seed: 11,
        n_logs: 30,
        n_activities: [4, 8],
        depth: [1, 3],
        n_traces: [10, 40],
        noise: 0.1,
        ..GeneratorConfig::default()
    }
}

/// Bundle trained on a small generated corpus; built once per test binary.
pub fn bundle() -> &'static ModelBundle {
    static B: OnceLock<ModelBundle> = OnceLock::new();
    B.get_or_init(|| {
        let corpus = build_corpus(&small_config()).unwrap();
        let params = FitParams {
            n_trees: 30,
            ..FitParams::default()
        };
        train_bundle(&corpus.loaded(), &params, 0.95).unwrap()
    })
}

pub fn app(dir: &Path, cap: usize) -> Router {
    app_with(dir, cap, bundle().clone())
}

pub fn app_with(dir: &Path, cap: usize, bundle: ModelBundle) -> Router {
    let state = AppState::new(Store::open(dir).unwrap(), bundle);
    let config = ServiceConfig {
        data_dir: dir.to_owned(),
        upload_cap: cap,
        static_dir: None,
    };
    router(state, &config)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Body, json_body: bool) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if json_body {
        req = req.header("content-type", "application/json");
    }
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, v)
}

pub async fn post_json(app: &Router, uri: &str, v: Value) -> (StatusCode, Value) {
    call(app, "POST", uri, Body::from(v.to_string()), true).await
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, "GET", uri, Body::empty(), false).await
}

pub fn code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

pub async fn upload(app: &Router) -> String {
    let (s, v) = call(app, "POST", "/logs?filename=orders.xes", Body::from(sample_bytes()), false).await;
    assert!(s == StatusCode::CREATED || s == StatusCode::OK, "{s} {v}");
    v["log_id"].as_str().unwrap().to_owned()
}
