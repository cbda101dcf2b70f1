//! The discovery portfolio. Every algorithm maps an event log to a workflow
//! net with places `source` and `sink`.

mod alpha;
mod heuristics;
mod inductive;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::EventLog;
use crate::petri_net::PetriNet;

pub use alpha::{alpha_plus, alpha_steps};
pub use heuristics::{heuristics, heuristics_dependency, DEFAULT_DEPENDENCY_THRESHOLD};
pub use inductive::{inductive_direct_tree, inductive_infrequent_tree, inductive_tree, DEFAULT_NOISE_THRESHOLD};
pub use tree::{tree_to_net, Operator, ProcessTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    Alpha,
    AlphaPlus,
    Heuristics,
    Inductive,
    InductiveInfrequent,
    InductiveDirect,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 6] = [
        AlgorithmId::Alpha,
        AlgorithmId::AlphaPlus,
        AlgorithmId::Heuristics,
        AlgorithmId::Inductive,
        AlgorithmId::InductiveInfrequent,
        AlgorithmId::InductiveDirect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Alpha => "alpha",
            AlgorithmId::AlphaPlus => "alpha_plus",
            AlgorithmId::Heuristics => "heuristics",
            AlgorithmId::Inductive => "inductive",
            AlgorithmId::InductiveInfrequent => "inductive_infrequent",
            AlgorithmId::InductiveDirect => "inductive_direct",
        }
    }

    /// Parameter names accepted by this algorithm.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            AlgorithmId::Heuristics => &["dependency_threshold"],
            AlgorithmId::InductiveInfrequent => &["noise_threshold"],
            _ => &[],
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = DiscoveryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| DiscoveryError::UnsupportedAlgorithm(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscoveryError {
    #[error("unsupported algorithm `{0}`")]
    UnsupportedAlgorithm(String),
    #[error("discovery failed: {0}")]
    DiscoveryFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl DiscoveryError {
    pub fn code(&self) -> &'static str {
        match self {
            DiscoveryError::UnsupportedAlgorithm(_) => "UnsupportedAlgorithm",
            DiscoveryError::DiscoveryFailure(_) => "DiscoveryFailure",
            DiscoveryError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

/// Numeric algorithm parameters by name. Missing entries take defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscoveryParams(pub BTreeMap<String, f64>);

impl DiscoveryParams {
    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    fn get(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }

    /// Rejects names the algorithm does not take and values outside [0, 1].
    pub fn validate(&self, alg: AlgorithmId) -> Result<(), DiscoveryError> {
        for (k, &v) in &self.0 {
            if !alg.parameters().contains(&k.as_str()) {
                return Err(DiscoveryError::InvalidParameter(format!("`{k}` is not a parameter of {alg}")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(DiscoveryError::InvalidParameter(format!("`{k}` = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Process tree for the inductive family; `None` for the other algorithms.
pub fn discover_tree(
    alg: AlgorithmId,
    log: &EventLog,
    params: &DiscoveryParams,
) -> Result<Option<ProcessTree>, DiscoveryError> {
    params.validate(alg)?;
    Ok(match alg {
        AlgorithmId::Inductive => Some(inductive_tree(log)),
        AlgorithmId::InductiveInfrequent => Some(inductive_infrequent_tree(
            log,
            params.get("noise_threshold", DEFAULT_NOISE_THRESHOLD),
        )),
        AlgorithmId::InductiveDirect => Some(inductive_direct_tree(log)),
        _ => None,
    })
}

pub fn discover(alg: AlgorithmId, log: &EventLog, params: &DiscoveryParams) -> Result<PetriNet, DiscoveryError> {
    params.validate(alg)?;
    let net = match alg {
        AlgorithmId::Alpha => alpha_steps(log),
        AlgorithmId::AlphaPlus => alpha_plus(log),
        AlgorithmId::Heuristics => heuristics(
            log,
            params.get("dependency_threshold", DEFAULT_DEPENDENCY_THRESHOLD),
        ),
        _ => {
            let tree = discover_tree(alg, log, params)?.expect("inductive family yields a tree");
            tree_to_net(&tree)
        }
    };
    if !net.is_workflow_net() {
        return Err(DiscoveryError::DiscoveryFailure(format!("{alg} did not produce a workflow net")));
    }
    Ok(net)
}

/// Discovery by algorithm name, as used by the service and CLI.
pub fn discover_by_name(name: &str, log: &EventLog, params: &DiscoveryParams) -> Result<PetriNet, DiscoveryError> {
    discover(name.parse()?, log, params)
}
