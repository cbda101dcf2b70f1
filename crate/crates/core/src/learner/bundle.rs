use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GradientBoostedEnsemble, LearnerError};
use crate::discovery::AlgorithmId;
use crate::features::CATALOG_VERSION;
use crate::quality::MeasureId;

pub const BUNDLE_FORMAT: &str = "minerec-bundle/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub algorithm: AlgorithmId,
    pub measure: MeasureId,
    pub model: GradientBoostedEnsemble,
}

/// All regressors of the portfolio with the feature schema they were
/// trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub catalog_version: String,
    /// `format` plus a content hash of the models and schema.
    pub bundle_version: String,
    pub feature_schema: Vec<usize>,
    pub models: Vec<ModelEntry>,
}

impl ModelBundle {
    /// Entries are stored in (algorithm, measure) order.
    pub fn new(mut models: Vec<ModelEntry>, feature_schema: Vec<usize>) -> Result<Self, LearnerError> {
        models.sort_by_key(|e| (e.algorithm, e.measure));
        let mut b = Self {
            format: BUNDLE_FORMAT.to_owned(),
            catalog_version: CATALOG_VERSION.to_owned(),
            bundle_version: String::new(),
            feature_schema,
            models,
        };
        b.bundle_version = b.content_version()?;
        b.validate()?;
        Ok(b)
    }

    fn content_version(&self) -> Result<String, LearnerError> {
        let body = serde_json::to_vec(&(&self.catalog_version, &self.feature_schema, &self.models))
            .map_err(|e| LearnerError::Bundle(e.to_string()))?;
        let digest = hex::encode(Sha256::digest(&body));
        Ok(format!("{}+{}", self.format, &digest[..12]))
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.format != BUNDLE_FORMAT {
            return Err(LearnerError::Bundle(format!("unsupported format {}", self.format)));
        }
        if self.catalog_version != CATALOG_VERSION {
            return Err(LearnerError::Bundle(format!(
                "trained on feature catalog {}, running {}",
                self.catalog_version, CATALOG_VERSION
            )));
        }
        for a in AlgorithmId::ALL {
            for m in MeasureId::ALL {
                let n = self.models.iter().filter(|e| e.algorithm == a && e.measure == m).count();
                if n != 1 {
                    return Err(LearnerError::Bundle(format!("expected one model for {a}/{m}, found {n}")));
                }
            }
        }
        if self.content_version()? != self.bundle_version {
            return Err(LearnerError::Bundle("bundle_version does not match content".into()));
        }
        Ok(())
    }

    pub fn get(&self, algorithm: AlgorithmId, measure: MeasureId) -> &GradientBoostedEnsemble {
        &self
            .models
            .iter()
            .find(|e| e.algorithm == algorithm && e.measure == measure)
            .expect("validated bundle holds every regressor")
            .model
    }

    pub fn entries(&self) -> Vec<(AlgorithmId, MeasureId, &GradientBoostedEnsemble)> {
        self.models.iter().map(|e| (e.algorithm, e.measure, &e.model)).collect()
    }

    pub fn to_json(&self) -> Result<String, LearnerError> {
        serde_json::to_string(self).map_err(|e| LearnerError::Bundle(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, LearnerError> {
        let b: ModelBundle = serde_json::from_str(s).map_err(|e| LearnerError::Bundle(e.to_string()))?;
        b.validate()?;
        Ok(b)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LearnerError> {
        fs::write(path, self.to_json()?).map_err(|e| LearnerError::Bundle(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LearnerError> {
        let s = fs::read_to_string(path).map_err(|e| LearnerError::Bundle(e.to_string()))?;
        Self::from_json(&s)
    }
}
