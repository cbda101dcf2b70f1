//! Request/response shapes and the operations behind them, shared by the
//! HTTP service and the command line so both print identical JSON.

use std::collections::BTreeMap;

use minerec_core::discovery::{discover, AlgorithmId, DiscoveryError, DiscoveryParams};
use minerec_core::event_log::{parse_xes, EventLog, LogError};
use minerec_core::explainer::{explanation_payload, shap_values, ExplanationPayload};
use minerec_core::features::{extract, feature_catalog, FeatureVector, CATALOG_VERSION};
use minerec_core::learner::{featurer_insights, FeatureInsight, ModelBundle};
use minerec_core::petri_net::NetJson;
use minerec_core::quality::MeasureId;
use minerec_core::recommender::{recommend_features, RecommendError, Recommendation, WeightVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Error with a stable machine-readable code and the HTTP status it maps to.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: ErrorDetail {
                code: self.code.clone(),
                message: self.message.clone(),
            },
        }
    }

    pub fn not_found(code: &str, what: &str) -> Self {
        Self::new(404, code, format!("{what} not found"))
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(500, "Internal", e.to_string())
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        Self::new(400, e.code(), e.to_string())
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        let status = if matches!(e, RecommendError::SchemaMismatch(_)) { 500 } else { 422 };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<DiscoveryError> for ApiError {
    fn from(e: DiscoveryError) -> Self {
        let status = if matches!(e, DiscoveryError::DiscoveryFailure(_)) { 500 } else { 422 };
        Self::new(status, e.code(), e.to_string())
    }
}

/// Content address of uploaded bytes: 16 hex chars of SHA-256.
pub fn log_id_of(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

/// Parses XES (plain or gzip) and computes the feature vector keyed by the
/// content address.
pub fn ingest(bytes: &[u8]) -> Result<(String, EventLog, FeatureVector), ApiError> {
    let log = parse_xes(bytes)?;
    let id = log_id_of(bytes);
    let features = extract(&log).with_log_id(id.clone());
    Ok((id, log, features))
}

pub fn recommendation(features: &FeatureVector, weights: &WeightVector, bundle: &ModelBundle) -> Result<Recommendation, ApiError> {
    Ok(recommend_features(features, weights, bundle)?)
}

pub fn parse_algorithm(name: &str) -> Result<AlgorithmId, ApiError> {
    name.parse::<AlgorithmId>().map_err(ApiError::from)
}

pub fn parse_measure(name: &str) -> Result<MeasureId, ApiError> {
    name.parse::<MeasureId>()
        .map_err(|_| ApiError::new(422, "UnknownMeasure", format!("unknown measure {name:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureValue {
    pub index: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesResponse {
    pub log_id: String,
    pub catalog_version: String,
    pub features: Vec<FeatureValue>,
}

pub fn features_response(fv: &FeatureVector) -> FeaturesResponse {
    FeaturesResponse {
        log_id: fv.log_id.clone(),
        catalog_version: CATALOG_VERSION.to_owned(),
        features: fv
            .named()
            .into_iter()
            .enumerate()
            .map(|(index, (name, value))| FeatureValue {
                index,
                name: name.to_owned(),
                value,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogResponse {
    pub catalog_version: String,
    pub bundle_version: String,
    pub features: Vec<FeatureInsight>,
}

pub fn catalog_response(bundle: &ModelBundle) -> CatalogResponse {
    CatalogResponse {
        catalog_version: CATALOG_VERSION.to_owned(),
        bundle_version: bundle.bundle_version.clone(),
        features: featurer_insights(&bundle.entries(), &feature_catalog()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverRequest {
    pub log_id: String,
    pub algorithm: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverResponse {
    pub log_id: String,
    pub algorithm: AlgorithmId,
    pub params: DiscoveryParams,
    pub net: NetJson,
    pub dot: String,
}

pub fn discover_response(
    log_id: &str,
    log: &EventLog,
    algorithm: &str,
    params: BTreeMap<String, f64>,
) -> Result<DiscoverResponse, ApiError> {
    let algorithm = parse_algorithm(algorithm)?;
    let params = DiscoveryParams(params);
    let net = discover(algorithm, log, &params)?;
    Ok(DiscoverResponse {
        log_id: log_id.to_owned(),
        algorithm,
        params,
        net: net.to_json(),
        dot: net.to_dot(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationResponse {
    pub log_id: String,
    pub algorithm: AlgorithmId,
    pub measure: MeasureId,
    pub bundle_version: String,
    #[serde(flatten)]
    pub payload: ExplanationPayload,
}

pub fn explanation_response(
    features: &FeatureVector,
    algorithm: &str,
    measure: &str,
    bundle: &ModelBundle,
) -> Result<ExplanationResponse, ApiError> {
    let algorithm = parse_algorithm(algorithm)?;
    let measure = parse_measure(measure)?;
    let model = bundle.get(algorithm, measure);
    let attr = shap_values(model, &features.values).map_err(ApiError::internal)?;
    Ok(ExplanationResponse {
        log_id: features.log_id.clone(),
        algorithm,
        measure,
        bundle_version: bundle.bundle_version.clone(),
        payload: explanation_payload(&attr, &features.values, &model.feature_schema, &feature_catalog()),
    })
}

/// Compact JSON followed by a newline; the byte form both front ends emit.
pub fn to_json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("response types serialize");
    s.push('\n');
    s
}
