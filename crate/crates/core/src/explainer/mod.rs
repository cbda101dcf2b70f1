//! Exact Shapley attributions for the boosted trees (path-dependent
//! TreeSHAP, node covers as conditional-expectation weights).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureDescriptor;
use crate::learner::{GradientBoostedEnsemble, LearnerError, Node, RegressionTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("input has {got} features, model expects {expected}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("model has not been fitted")]
    UnfittedModel,
}

impl From<LearnerError> for ExplainError {
    fn from(e: LearnerError) -> Self {
        match e {
            LearnerError::SchemaMismatch { expected, got } => ExplainError::SchemaMismatch { expected, got },
            _ => ExplainError::UnfittedModel,
        }
    }
}

/// Attributions of the unclamped ensemble output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub base_value: f64,
    /// One entry per input feature.
    pub contributions: Vec<f64>,
    /// Unclamped model output; equals `base_value + Σ contributions`.
    pub prediction: f64,
    /// What the recommender reports (clamped to [0, 1]).
    pub clamped_prediction: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    let denom = (l + 1) as f64;
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / denom;
    }
}

fn unwind(path: &mut Vec<PathElem>, k: usize) {
    let d = path.len() - 1;
    let (one, zero) = (path[k].one, path[k].zero);
    let denom = (d + 1) as f64;
    let mut next = path[d].weight;
    for i in (0..d).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (d - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero * (d - i) as f64);
        }
    }
    for i in k..d {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

/// Total weight of the path with element `k` unwound, without modifying it.
fn unwound_sum(path: &[PathElem], k: usize) -> f64 {
    let d = path.len() - 1;
    let (one, zero) = (path[k].one, path[k].zero);
    let denom = (d + 1) as f64;
    let mut next = path[d].weight;
    let mut total = 0.0;
    for i in (0..d).rev() {
        if one != 0.0 {
            let tmp = next * denom / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (d - i) as f64 / denom;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((d - i) as f64 / denom);
        }
    }
    total
}

fn recurse(
    tree: &RegressionTree,
    node: usize,
    x: &[f64],
    mut path: Vec<PathElem>,
    zero: f64,
    one: f64,
    feature: Option<usize>,
    phi: &mut [f64],
) {
    extend(&mut path, zero, one, feature);
    match &tree.nodes[node] {
        Node::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let f = path[i].feature.expect("non-root path element has a feature");
                phi[f] += w * (path[i].one - path[i].zero) * value;
            }
        }
        Node::Split {
            feature: f,
            threshold,
            left,
            right,
            cover,
            ..
        } => {
            let (hot, cold) = if x[*f] < *threshold { (*left, *right) } else { (*right, *left) };
            let (mut in_zero, mut in_one) = (1.0, 1.0);
            if let Some(k) = path.iter().position(|e| e.feature == Some(*f)) {
                in_zero = path[k].zero;
                in_one = path[k].one;
                unwind(&mut path, k);
            }
            let hot_frac = tree.nodes[hot].cover() / cover;
            let cold_frac = tree.nodes[cold].cover() / cover;
            recurse(tree, hot, x, path.clone(), hot_frac * in_zero, in_one, Some(*f), phi);
            recurse(tree, cold, x, path, cold_frac * in_zero, 0.0, Some(*f), phi);
        }
    }
}

/// Shapley values of a single tree at `x`, one per input feature.
pub fn tree_shap(tree: &RegressionTree, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; x.len()];
    recurse(tree, 0, x, Vec::new(), 1.0, 1.0, None, &mut phi);
    phi
}

pub fn shap_values(model: &GradientBoostedEnsemble, x: &[f64]) -> Result<Attribution, ExplainError> {
    if model.n_features == 0 {
        return Err(ExplainError::UnfittedModel);
    }
    let prediction = model.predict_raw(x)?;
    let lr = model.learning_rate;
    let mut contributions = vec![0.0; x.len()];
    let mut base_value = model.base_score;
    for t in &model.trees {
        base_value += lr * t.expected_value();
        for (c, p) in contributions.iter_mut().zip(tree_shap(t, x)) {
            *c += lr * p;
        }
    }
    let clamped_prediction = prediction.clamp(0.0, 1.0);
    Ok(Attribution {
        base_value,
        contributions,
        prediction,
        clamped_prediction,
        clamped: clamped_prediction != prediction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationItem {
    pub index: usize,
    pub feature: String,
    pub value: f64,
    pub contribution: f64,
    /// Running total from `base` after adding this item.
    pub cumulative: f64,
}

/// Waterfall-ready explanation: `items` sorted by |contribution| (ties by
/// index); the last cumulative value equals `prediction` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationPayload {
    pub base: f64,
    pub prediction: f64,
    pub clamped_prediction: f64,
    pub clamped: bool,
    pub items: Vec<ExplanationItem>,
}

/// One item per feature of `schema`.
pub fn explanation_payload(
    attr: &Attribution,
    x: &[f64],
    schema: &[usize],
    catalog: &[FeatureDescriptor],
) -> ExplanationPayload {
    let mut order: Vec<usize> = schema.to_vec();
    order.sort_by(|&a, &b| {
        attr.contributions[b]
            .abs()
            .total_cmp(&attr.contributions[a].abs())
            .then(a.cmp(&b))
    });
    let mut running = attr.base_value;
    let items = order
        .into_iter()
        .map(|i| {
            running += attr.contributions[i];
            ExplanationItem {
                index: i,
                feature: catalog.get(i).map_or_else(|| format!("f{i}"), |d| d.name.clone()),
                value: x[i],
                contribution: attr.contributions[i],
                cumulative: running,
            }
        })
        .collect();
    ExplanationPayload {
        base: attr.base_value,
        prediction: attr.prediction,
        clamped_prediction: attr.clamped_prediction,
        clamped: attr.clamped,
        items,
    }
}
