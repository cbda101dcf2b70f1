//! Core library for recommending process-discovery algorithms.
//!
//! The pipeline: parse an [`event_log::EventLog`], summarize it as a
//! [`features::FeatureVector`], predict four quality measures per discovery
//! algorithm with boosted regression trees ([`learner`]), combine them with
//! user weights into a ranking ([`recommender`]) and explain each prediction
//! with exact tree Shapley values ([`explainer`]). Ground truth comes from
//! running the [`discovery`] portfolio and measuring the mined nets with
//! [`quality`]; the [`corpus`] module generates labeled training logs.

pub mod corpus;
pub mod discovery;
pub mod event_log;
pub mod explainer;
pub mod features;
pub mod learner;
pub mod petri_net;
pub mod quality;
pub mod recommender;

pub use discovery::{discover, AlgorithmId, DiscoveryError, DiscoveryParams};
pub use event_log::{EventLog, LogError};
pub use features::{extract, FeatureVector};
pub use petri_net::{Marking, PetriNet};
pub use quality::{evaluate_all, MeasureId, QualityReport};
pub use explainer::{shap_values, Attribution, ExplanationPayload};
pub use learner::{FitParams, GradientBoostedEnsemble, ModelBundle};
pub use recommender::{recommend, Recommendation, RecommendError, WeightVector};
