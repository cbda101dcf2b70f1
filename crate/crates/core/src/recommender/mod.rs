//! Weighted scoring and ranking of the discovery portfolio.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{discover, AlgorithmId, DiscoveryParams};
use crate::event_log::EventLog;
use crate::features::{extract, FeatureVector, CATALOG_VERSION, N_FEATURES};
use crate::learner::ModelBundle;
use crate::quality::{evaluate_all, MeasureId};

pub const MAX_WEIGHT: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("weight for {0} must be a number in [0, 100], got {1}")]
    WeightOutOfRange(MeasureId, f64),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

impl RecommendError {
    pub fn code(&self) -> &'static str {
        match self {
            RecommendError::AllZeroWeights => "AllZeroWeights",
            RecommendError::WeightOutOfRange(..) => "WeightOutOfRange",
            RecommendError::SchemaMismatch(_) => "SchemaMismatch",
        }
    }
}

/// User weight per measure, each in [0, 100], not all zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightVector {
    pub fitness: f64,
    pub precision: f64,
    pub generalization: f64,
    pub simplicity: f64,
}

impl WeightVector {
    pub fn new(fitness: f64, precision: f64, generalization: f64, simplicity: f64) -> Result<Self, RecommendError> {
        let w = Self {
            fitness,
            precision,
            generalization,
            simplicity,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn get(&self, m: MeasureId) -> f64 {
        match m {
            MeasureId::Fitness => self.fitness,
            MeasureId::Precision => self.precision,
            MeasureId::Generalization => self.generalization,
            MeasureId::Simplicity => self.simplicity,
        }
    }

    pub fn validate(&self) -> Result<(), RecommendError> {
        for m in MeasureId::ALL {
            let v = self.get(m);
            if !(0.0..=MAX_WEIGHT).contains(&v) {
                return Err(RecommendError::WeightOutOfRange(m, v));
            }
        }
        if MeasureId::ALL.iter().all(|&m| self.get(m) == 0.0) {
            return Err(RecommendError::AllZeroWeights);
        }
        Ok(())
    }
}

/// Per-measure values keyed by measure name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValues {
    pub fitness: f64,
    pub precision: f64,
    pub generalization: f64,
    pub simplicity: f64,
}

impl MeasureValues {
    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            fitness: v[0],
            precision: v[1],
            generalization: v[2],
            simplicity: v[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.fitness, self.precision, self.generalization, self.simplicity]
    }

    pub fn get(&self, m: MeasureId) -> f64 {
        self.to_array()[m.index()]
    }
}

/// `Σ w·v / Σ w`.
pub fn score(predicted: &MeasureValues, w: &WeightVector) -> Result<f64, RecommendError> {
    w.validate()?;
    let num: f64 = MeasureId::ALL.iter().map(|&m| w.get(m) * predicted.get(m)).sum();
    let den: f64 = MeasureId::ALL.iter().map(|&m| w.get(m)).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmScore {
    pub algorithm: AlgorithmId,
    pub score: f64,
    pub predicted: MeasureValues,
    /// Set only by ground-truth evaluation when discovery or measurement
    /// failed; such entries rank last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub log_id: String,
    pub weights: WeightVector,
    /// Sorted by score descending, ties by algorithm name.
    pub results: Vec<AlgorithmScore>,
    pub bundle_version: String,
}

impl Recommendation {
    pub fn ranking(&self) -> Vec<AlgorithmId> {
        self.results.iter().map(|r| r.algorithm).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("recommendation serializes")
    }
}

fn rank(results: &mut [AlgorithmScore]) {
    results.sort_by(|a, b| {
        a.failure
            .is_some()
            .cmp(&b.failure.is_some())
            .then(b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal))
            .then(a.algorithm.as_str().cmp(b.algorithm.as_str()))
    });
}

/// Predicted per-measure values of every algorithm for one feature vector.
pub fn predict_all(features: &FeatureVector, bundle: &ModelBundle) -> Result<BTreeMap<AlgorithmId, MeasureValues>, RecommendError> {
    if bundle.catalog_version != CATALOG_VERSION || features.values.len() != N_FEATURES {
        return Err(RecommendError::SchemaMismatch(format!(
            "bundle catalog {}, runtime catalog {CATALOG_VERSION}, {} feature values",
            bundle.catalog_version,
            features.values.len()
        )));
    }
    AlgorithmId::ALL
        .into_iter()
        .map(|a| {
            let mut v = [0.0; 4];
            for m in MeasureId::ALL {
                v[m.index()] = bundle
                    .get(a, m)
                    .predict(&features.values)
                    .map_err(|e| RecommendError::SchemaMismatch(e.to_string()))?;
            }
            Ok((a, MeasureValues::from_array(v)))
        })
        .collect()
}

/// Ranking from precomputed features.
pub fn recommend_features(features: &FeatureVector, w: &WeightVector, bundle: &ModelBundle) -> Result<Recommendation, RecommendError> {
    w.validate()?;
    let predicted = predict_all(features, bundle)?;
    let mut results: Vec<AlgorithmScore> = predicted
        .into_iter()
        .map(|(algorithm, p)| {
            Ok(AlgorithmScore {
                algorithm,
                score: score(&p, w)?,
                predicted: p,
                failure: None,
            })
        })
        .collect::<Result<_, RecommendError>>()?;
    rank(&mut results);
    Ok(Recommendation {
        log_id: features.log_id.clone(),
        weights: *w,
        results,
        bundle_version: bundle.bundle_version.clone(),
    })
}

pub fn recommend(log: &EventLog, w: &WeightVector, bundle: &ModelBundle) -> Result<Recommendation, RecommendError> {
    w.validate()?;
    recommend_features(&extract(log), w, bundle)
}

/// Measured (not predicted) counterpart of [`recommend`]: every algorithm is
/// run and its net evaluated. `bundle_version` is `"ground-truth"`.
pub fn evaluate_ground_truth(log: &EventLog, w: &WeightVector) -> Result<Recommendation, RecommendError> {
    w.validate()?;
    let mut results: Vec<AlgorithmScore> = AlgorithmId::ALL
        .par_iter()
        .map(|&algorithm| {
            let measured = discover(algorithm, log, &DiscoveryParams::default())
                .map_err(|e| e.to_string())
                .and_then(|net| evaluate_all(log, &net).map_err(|e| e.to_string()));
            match measured {
                Ok(r) => {
                    let p = MeasureValues::from_array(r.values());
                    AlgorithmScore {
                        algorithm,
                        score: score(&p, w).expect("weights validated"),
                        predicted: p,
                        failure: None,
                    }
                }
                Err(e) => AlgorithmScore {
                    algorithm,
                    score: 0.0,
                    predicted: MeasureValues::from_array([0.0; 4]),
                    failure: Some(e),
                },
            }
        })
        .collect();
    rank(&mut results);
    Ok(Recommendation {
        log_id: extract(log).log_id,
        weights: *w,
        results,
        bundle_version: "ground-truth".into(),
    })
}
