//! Gradient-boosted regression trees with squared-error loss: one model per
//! (algorithm, measure) pair.

mod bundle;
mod cv;
mod tree;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::AlgorithmId;
use crate::features::{FeatureDescriptor, FeatureSource, FeatureVector};
use crate::quality::MeasureId;

pub use bundle::{ModelBundle, ModelEntry, BUNDLE_FORMAT};
pub use cv::{cross_validate, CvReport, FoldMetrics};
pub use tree::{Node, RegressionTree, MIN_SPLIT_GAIN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("too few samples: {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("non-finite value in training data")]
    NonFiniteInput,
    #[error("input has {got} features, model expects {expected}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("invalid training parameter: {0}")]
    InvalidParams(String),
    #[error("model bundle: {0}")]
    Bundle(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Row fraction drawn (without replacement) for each tree; 1.0 uses all
    /// rows and makes `seed` irrelevant.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 3,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl FitParams {
    fn validate(&self) -> Result<(), LearnerError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(LearnerError::InvalidParams("learning_rate must be in (0, 1]".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(LearnerError::InvalidParams("subsample must be in (0, 1]".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(LearnerError::InvalidParams("min_samples_leaf must be positive".into()));
        }
        Ok(())
    }
}

/// Rows of full-width feature values with one target per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDataset {
    pub ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl TrainingDataset {
    pub fn new(ids: Vec<String>, x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, LearnerError> {
        if x.len() != y.len() || ids.len() != y.len() {
            return Err(LearnerError::SchemaMismatch {
                expected: y.len(),
                got: x.len(),
            });
        }
        if let Some(w) = x.first().map(Vec::len) {
            if let Some(bad) = x.iter().find(|r| r.len() != w) {
                return Err(LearnerError::SchemaMismatch { expected: w, got: bad.len() });
            }
        }
        if x.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFiniteInput);
        }
        Ok(Self { ids, x, y })
    }

    pub fn from_features(rows: &[FeatureVector], y: Vec<f64>) -> Result<Self, LearnerError> {
        Self::new(
            rows.iter().map(|r| r.log_id.clone()).collect(),
            rows.iter().map(|r| r.values.clone()).collect(),
            y,
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub(crate) fn subset(&self, rows: &[usize]) -> TrainingDataset {
        TrainingDataset {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            x: rows.iter().map(|&r| self.x[r].clone()).collect(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedEnsemble {
    pub base_score: f64,
    pub learning_rate: f64,
    /// Width of the input vectors.
    pub n_features: usize,
    /// Input indices the trees may split on.
    pub feature_schema: Vec<usize>,
    pub trees: Vec<RegressionTree>,
}

impl GradientBoostedEnsemble {
    fn check(&self, x: &[f64]) -> Result<(), LearnerError> {
        if x.len() != self.n_features {
            return Err(LearnerError::SchemaMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `base_score + learning_rate · Σ tree(x)` without clamping.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, LearnerError> {
        self.check(x)?;
        Ok(self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }

    /// Prediction clamped to [0, 1].
    pub fn predict(&self, x: &[f64]) -> Result<f64, LearnerError> {
        Ok(self.predict_raw(x)?.clamp(0.0, 1.0))
    }
}

/// Fits on all columns listed in `schema`.
pub fn fit(data: &TrainingDataset, schema: &[usize], params: &FitParams) -> Result<GradientBoostedEnsemble, LearnerError> {
    params.validate()?;
    let need = 2 * params.min_samples_leaf;
    if data.len() < need {
        return Err(LearnerError::TooFewSamples { got: data.len(), need });
    }
    let n_features = data.n_features();
    if let Some(&bad) = schema.iter().find(|&&f| f >= n_features) {
        return Err(LearnerError::SchemaMismatch {
            expected: n_features,
            got: bad + 1,
        });
    }
    let mut schema = schema.to_vec();
    schema.sort_unstable();
    schema.dedup();

    let n = data.len();
    let base_score = data.y.iter().sum::<f64>() / n as f64;
    let mut raw = vec![base_score; n];
    let mut trees = Vec::new();
    let grow_params = tree::GrowParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let all: Vec<usize> = (0..n).collect();
    let n_sub = ((params.subsample * n as f64).round() as usize).clamp(need.min(n), n);

    for _ in 0..params.n_trees {
        let residual: Vec<f64> = data.y.iter().zip(&raw).map(|(y, p)| y - p).collect();
        let rows: Vec<usize> = if n_sub < n {
            let mut r = sample(&mut rng, n, n_sub).into_vec();
            r.sort_unstable();
            r
        } else {
            all.clone()
        };
        let t = tree::grow(&data.x, &residual, &rows, &schema, &grow_params);
        // No split reached the minimum gain: further rounds change nothing.
        if t.nodes.len() == 1 {
            break;
        }
        for (p, row) in raw.iter_mut().zip(&data.x) {
            *p += params.learning_rate * t.predict(row);
        }
        trees.push(t);
    }

    Ok(GradientBoostedEnsemble {
        base_score,
        learning_rate: params.learning_rate,
        n_features,
        feature_schema: schema,
        trees,
    })
}

/// Total split gain per input feature, normalized to sum to 1; all zeros
/// when the model has no split.
pub fn feature_importance(model: &GradientBoostedEnsemble) -> Vec<f64> {
    let mut gain = vec![0.0; model.n_features];
    for t in &model.trees {
        for n in &t.nodes {
            if let Node::Split { feature, gain: g, .. } = n {
                gain[*feature] += g;
            }
        }
    }
    let total: f64 = gain.iter().sum();
    if total > 0.0 {
        gain.iter_mut().for_each(|g| *g /= total);
    }
    gain
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorId {
    pub algorithm: AlgorithmId,
    pub measure: MeasureId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInsight {
    pub index: usize,
    pub name: String,
    pub description: String,
    pub source: FeatureSource,
    /// Number of regressors with at least one split on the feature.
    pub used_in_count: usize,
    /// Regressor with the highest normalized gain on the feature.
    pub most_important_for: Option<RegressorId>,
    /// 1-based position by descending score, ties by index.
    pub rank: usize,
    /// Mean normalized gain across all regressors.
    pub score: f64,
}

pub fn featurer_insights(
    models: &[(AlgorithmId, MeasureId, &GradientBoostedEnsemble)],
    catalog: &[FeatureDescriptor],
) -> Vec<FeatureInsight> {
    let importances: Vec<Vec<f64>> = models.iter().map(|(_, _, m)| feature_importance(m)).collect();
    let imp = |m: usize, f: usize| importances[m].get(f).copied().unwrap_or(0.0);
    let mut out: Vec<FeatureInsight> = catalog
        .iter()
        .map(|d| {
            let f = d.index;
            let used_in_count = (0..models.len()).filter(|&m| imp(m, f) > 0.0).count();
            let score = if models.is_empty() {
                0.0
            } else {
                (0..models.len()).map(|m| imp(m, f)).sum::<f64>() / models.len() as f64
            };
            let mut best: Option<(usize, f64)> = None;
            for m in 0..models.len() {
                if imp(m, f) > 0.0 && best.is_none_or(|(_, g)| imp(m, f) > g) {
                    best = Some((m, imp(m, f)));
                }
            }
            FeatureInsight {
                index: f,
                name: d.name.clone(),
                description: d.description.clone(),
                source: d.source,
                used_in_count,
                most_important_for: best.map(|(m, _)| RegressorId {
                    algorithm: models[m].0,
                    measure: models[m].1,
                }),
                rank: 0,
                score,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| out[b].score.total_cmp(&out[a].score).then(out[a].index.cmp(&out[b].index)));
    for (r, i) in order.into_iter().enumerate() {
        out[i].rank = r + 1;
    }
    out
}
