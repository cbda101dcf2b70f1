//! On-disk store for uploaded logs and recommendations.
//!
//! Layout under the data directory:
//! `logs/<log_id>.xes` (raw upload bytes), `logs/<log_id>.json` (metadata
//! and cached features), `recommendations/<rec_id>.json`. The in-memory
//! index is rebuilt from these files on open.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use minerec_core::event_log::EventLog;
use minerec_core::features::{extract, FeatureVector, CATALOG_VERSION};
use minerec_core::recommender::{Recommendation, WeightVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::api::{ingest, ApiError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredLog {
    pub log_id: String,
    pub filename: Option<String>,
    pub uploaded_at: DateTime<Utc>,
    pub n_traces: usize,
    pub n_events: usize,
    pub catalog_version: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecommendation {
    pub rec_id: String,
    pub log_id: String,
    pub weights: WeightVector,
    pub recommendation: Recommendation,
    pub created_at: DateTime<Utc>,
}

/// Identifier of a recommendation request; equal inputs and bundle give
/// equal ids.
pub fn rec_id_of(log_id: &str, weights: &WeightVector, bundle_version: &str) -> String {
    let body = serde_json::to_vec(&(log_id, weights, bundle_version)).expect("serializable");
    hex::encode(&Sha256::digest(&body)[..8])
}

pub struct Store {
    dir: PathBuf,
    logs: RwLock<BTreeMap<String, StoredLog>>,
    recs: RwLock<BTreeMap<String, StoredRecommendation>>,
    /// Serializes every write to disk.
    writer: Mutex<()>,
}

fn io(e: impl std::fmt::Display) -> ApiError {
    ApiError::internal(e)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ApiError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ApiError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("logs")).map_err(io)?;
        fs::create_dir_all(dir.join("recommendations")).map_err(io)?;
        let store = Self {
            dir,
            logs: RwLock::new(BTreeMap::new()),
            recs: RwLock::new(BTreeMap::new()),
            writer: Mutex::new(()),
        };
        store.load()?;
        Ok(store)
    }

    fn load(&self) -> Result<(), ApiError> {
        let mut logs = BTreeMap::new();
        for entry in fs::read_dir(self.dir.join("logs")).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let mut meta: StoredLog = serde_json::from_slice(&fs::read(&path).map_err(io)?).map_err(io)?;
                if meta.catalog_version != CATALOG_VERSION {
                    // Stale feature cache: recompute from the stored bytes.
                    let log = self.read_log_file(&meta.log_id)?;
                    meta.features = extract(&log).with_log_id(meta.log_id.clone());
                    meta.catalog_version = CATALOG_VERSION.to_owned();
                    write_atomic(&path, &serde_json::to_vec_pretty(&meta).map_err(io)?)?;
                }
                logs.insert(meta.log_id.clone(), meta);
            }
        }
        let mut recs = BTreeMap::new();
        for entry in fs::read_dir(self.dir.join("recommendations")).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let rec: StoredRecommendation = serde_json::from_slice(&fs::read(&path).map_err(io)?).map_err(io)?;
                recs.insert(rec.rec_id.clone(), rec);
            }
        }
        *self.logs.write().expect("lock") = logs;
        *self.recs.write().expect("lock") = recs;
        Ok(())
    }

    fn xes_path(&self, log_id: &str) -> PathBuf {
        self.dir.join("logs").join(format!("{log_id}.xes"))
    }

    fn read_log_file(&self, log_id: &str) -> Result<EventLog, ApiError> {
        let bytes = fs::read(self.xes_path(log_id)).map_err(io)?;
        Ok(minerec_core::event_log::parse_xes(&bytes[..])?)
    }

    /// Parses and stores an upload. Returns the metadata and whether it was
    /// new; a repeated upload keeps the first copy.
    pub fn put_log(&self, bytes: &[u8], filename: Option<String>) -> Result<(StoredLog, bool), ApiError> {
        let (log_id, log, features) = ingest(bytes)?;
        let _w = self.writer.lock().expect("writer lock");
        if let Some(existing) = self.get_log(&log_id) {
            return Ok((existing, false));
        }
        let meta = StoredLog {
            log_id: log_id.clone(),
            filename,
            uploaded_at: Utc::now(),
            n_traces: log.traces().len(),
            n_events: log.n_events(),
            catalog_version: CATALOG_VERSION.to_owned(),
            features,
        };
        write_atomic(&self.xes_path(&log_id), bytes)?;
        write_atomic(
            &self.dir.join("logs").join(format!("{log_id}.json")),
            &serde_json::to_vec_pretty(&meta).map_err(io)?,
        )?;
        self.logs.write().expect("lock").insert(log_id, meta.clone());
        Ok((meta, true))
    }

    pub fn get_log(&self, log_id: &str) -> Option<StoredLog> {
        self.logs.read().expect("lock").get(log_id).cloned()
    }

    pub fn log_bytes(&self, log_id: &str) -> Result<Vec<u8>, ApiError> {
        if self.get_log(log_id).is_none() {
            return Err(ApiError::not_found("UnknownLog", &format!("log {log_id}")));
        }
        fs::read(self.xes_path(log_id)).map_err(io)
    }

    pub fn load_log(&self, log_id: &str) -> Result<EventLog, ApiError> {
        if self.get_log(log_id).is_none() {
            return Err(ApiError::not_found("UnknownLog", &format!("log {log_id}")));
        }
        self.read_log_file(log_id)
    }

    /// Stores `rec` unless one with the same id exists; returns the stored
    /// record and whether it was new.
    pub fn put_recommendation(&self, rec: StoredRecommendation) -> Result<(StoredRecommendation, bool), ApiError> {
        let _w = self.writer.lock().expect("writer lock");
        if let Some(existing) = self.get_recommendation(&rec.rec_id) {
            return Ok((existing, false));
        }
        write_atomic(
            &self.dir.join("recommendations").join(format!("{}.json", rec.rec_id)),
            &serde_json::to_vec_pretty(&rec).map_err(io)?,
        )?;
        self.recs.write().expect("lock").insert(rec.rec_id.clone(), rec.clone());
        Ok((rec, true))
    }

    pub fn get_recommendation(&self, rec_id: &str) -> Option<StoredRecommendation> {
        self.recs.read().expect("lock").get(rec_id).cloned()
    }

    pub fn log_ids(&self) -> Vec<String> {
        self.logs.read().expect("lock").keys().cloned().collect()
    }
}
