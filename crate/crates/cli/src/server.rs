//! HTTP+JSON gateway.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use minerec_core::learner::ModelBundle;
use minerec_core::recommender::WeightVector;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::api::{self, ApiError, CatalogResponse, DiscoverRequest};
use crate::store::{rec_id_of, Store, StoredLog, StoredRecommendation};

pub const DEFAULT_UPLOAD_CAP: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub upload_cap: usize,
    /// Directory of a built web UI, served at `/`.
    pub static_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub bundle: Arc<ModelBundle>,
    catalog: Arc<CatalogResponse>,
}

impl AppState {
    pub fn new(store: Store, bundle: ModelBundle) -> Self {
        let catalog = api::catalog_response(&bundle);
        Self {
            store: Arc::new(store),
            bundle: Arc::new(bundle),
            catalog: Arc::new(catalog),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs `f` on the blocking pool so long computations do not stall other
/// requests.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    match body {
        Ok(Json(v)) => Ok(v),
        Err(JsonRejection::JsonSyntaxError(e)) => Err(ApiError::new(400, "MalformedJson", e.body_text())),
        Err(e) => Err(ApiError::new(422, "InvalidRequest", e.body_text())),
    }
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    filename: Option<String>,
}

#[derive(Debug, Serialize)]
struct UploadResponse {
    log_id: String,
    created: bool,
    log: StoredLog,
}

async fn upload_log(
    State(st): State<AppState>,
    Query(q): Query<UploadQuery>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let bytes = body.map_err(|e| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(413, "PayloadTooLarge", "upload exceeds the size cap")
        } else {
            ApiError::new(400, "BadBody", e.body_text())
        }
    })?;
    let store = st.store.clone();
    let (log, created) = blocking(move || store.put_log(&bytes, q.filename)).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((
        status,
        Json(UploadResponse {
            log_id: log.log_id.clone(),
            created,
            log,
        }),
    )
        .into_response())
}

async fn get_log(State(st): State<AppState>, Path(log_id): Path<String>) -> ApiResult<Json<StoredLog>> {
    st.store
        .get_log(&log_id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("UnknownLog", &format!("log {log_id}")))
}

async fn get_log_xes(State(st): State<AppState>, Path(log_id): Path<String>) -> ApiResult<Response> {
    let bytes = st.store.log_bytes(&log_id)?;
    let gz = bytes.starts_with(&[0x1f, 0x8b]);
    let ctype = if gz { "application/gzip" } else { "application/xml" };
    Ok(([(header::CONTENT_TYPE, ctype)], bytes).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecommendRequest {
    log_id: String,
    weights: WeightVector,
}

async fn create_recommendation(
    State(st): State<AppState>,
    body: Result<Json<RecommendRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let req = json_body(body)?;
    let log = st
        .store
        .get_log(&req.log_id)
        .ok_or_else(|| ApiError::not_found("UnknownLog", &format!("log {}", req.log_id)))?;
    let rec_id = rec_id_of(&req.log_id, &req.weights, &st.bundle.bundle_version);
    if let Some(existing) = st.store.get_recommendation(&rec_id) {
        return Ok((StatusCode::OK, Json(existing)).into_response());
    }
    let (store, bundle) = (st.store.clone(), st.bundle.clone());
    let (rec, created) = blocking(move || {
        let recommendation = api::recommendation(&log.features, &req.weights, &bundle)?;
        store.put_recommendation(StoredRecommendation {
            rec_id,
            log_id: req.log_id,
            weights: req.weights,
            recommendation,
            created_at: Utc::now(),
        })
    })
    .await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(rec)).into_response())
}

async fn get_recommendation(State(st): State<AppState>, Path(rec_id): Path<String>) -> ApiResult<Json<StoredRecommendation>> {
    st.store
        .get_recommendation(&rec_id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("UnknownRecommendation", &format!("recommendation {rec_id}")))
}

async fn get_explanation(
    State(st): State<AppState>,
    Path((rec_id, algorithm, measure)): Path<(String, String, String)>,
) -> ApiResult<Json<api::ExplanationResponse>> {
    let rec = st
        .store
        .get_recommendation(&rec_id)
        .ok_or_else(|| ApiError::not_found("UnknownRecommendation", &format!("recommendation {rec_id}")))?;
    let log = st
        .store
        .get_log(&rec.log_id)
        .ok_or_else(|| ApiError::not_found("UnknownLog", &format!("log {}", rec.log_id)))?;
    let bundle = st.bundle.clone();
    blocking(move || api::explanation_response(&log.features, &algorithm, &measure, &bundle))
        .await
        .map(Json)
}

async fn discover_net(
    State(st): State<AppState>,
    body: Result<Json<DiscoverRequest>, JsonRejection>,
) -> ApiResult<Json<api::DiscoverResponse>> {
    let req = json_body(body)?;
    // Validate the algorithm before the (possibly slow) log load.
    api::parse_algorithm(&req.algorithm)?;
    let store = st.store.clone();
    blocking(move || {
        let log = store.load_log(&req.log_id)?;
        api::discover_response(&req.log_id, &log, &req.algorithm, req.params)
    })
    .await
    .map(Json)
}

async fn get_features(State(st): State<AppState>, Path(log_id): Path<String>) -> ApiResult<Json<api::FeaturesResponse>> {
    let log = st
        .store
        .get_log(&log_id)
        .ok_or_else(|| ApiError::not_found("UnknownLog", &format!("log {log_id}")))?;
    Ok(Json(api::features_response(&log.features)))
}

async fn get_catalog(State(st): State<AppState>) -> Json<CatalogResponse> {
    Json((*st.catalog).clone())
}

async fn health(State(st): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "bundle_version": st.bundle.bundle_version }))
}

async fn no_route() -> ApiError {
    ApiError::new(404, "NotFound", "no such route")
}

pub fn router(state: AppState, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/logs", post(upload_log))
        .route("/logs/{log_id}", get(get_log))
        .route("/logs/{log_id}/xes", get(get_log_xes))
        .route("/recommendations", post(create_recommendation))
        .route("/recommendations/{rec_id}", get(get_recommendation))
        .route(
            "/recommendations/{rec_id}/explanations/{algorithm}/{measure}",
            get(get_explanation),
        )
        .route("/discover", post(discover_net))
        .route("/features/{log_id}", get(get_features))
        .route("/catalog/features", get(get_catalog))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(config.upload_cap))
        .with_state(state);
    match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(no_route),
    }
}

/// Binds and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState, config: ServiceConfig) -> anyhow::Result<()> {
    let app = router(state, &config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
