//! Model-quality measures of a net with respect to a log: token-replay
//! fitness, escaping-edges precision, execution-count generalization and
//! arc-degree simplicity.

mod replay;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::EventLog;
use crate::petri_net::PetriNet;

pub use replay::{replay, ReplayResult, SILENT_SEARCH_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureId {
    Fitness,
    Precision,
    Generalization,
    Simplicity,
}

impl MeasureId {
    pub const ALL: [MeasureId; 4] = [
        MeasureId::Fitness,
        MeasureId::Precision,
        MeasureId::Generalization,
        MeasureId::Simplicity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureId::Fitness => "fitness",
            MeasureId::Precision => "precision",
            MeasureId::Generalization => "generalization",
            MeasureId::Simplicity => "simplicity",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureId {
    type Err = QualityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MeasureId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| QualityError::UnknownMeasure(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QualityError {
    #[error("net is not a workflow net: {0}")]
    NotWorkflowNet(String),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
}

fn check(net: &PetriNet) -> Result<(), QualityError> {
    net.validate().map_err(|e| QualityError::NotWorkflowNet(e.to_string()))?;
    if !net.is_workflow_net() {
        return Err(QualityError::NotWorkflowNet(
            "expected exactly one source and one sink place".into(),
        ));
    }
    Ok(())
}

pub fn fitness_token_replay(log: &EventLog, net: &PetriNet) -> Result<f64, QualityError> {
    check(net)?;
    Ok(replay(log, net).fitness())
}

/// Escaping-edges precision. A net from which no labeled transition can be
/// reached yields 1.0; [`ReplayResult::degenerate_precision`] flags it.
pub fn precision_escaping_edges(log: &EventLog, net: &PetriNet) -> Result<f64, QualityError> {
    check(net)?;
    Ok(replay(log, net).precision())
}

pub fn generalization(log: &EventLog, net: &PetriNet) -> Result<f64, QualityError> {
    check(net)?;
    Ok(replay(log, net).generalization(net))
}

/// `1 / (1 + max(0, d - 2))` with `d` the mean node degree.
pub fn simplicity(net: &PetriNet) -> f64 {
    let nodes = net.places().len() + net.transitions().len();
    if nodes == 0 {
        return 1.0;
    }
    let degree = 2.0 * net.n_arcs() as f64 / nodes as f64;
    1.0 / (1.0 + (degree - 2.0).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayDiagnostics {
    pub produced: u64,
    pub consumed: u64,
    pub missing: u64,
    pub remaining: u64,
    pub traces: u64,
    pub fitting_traces: u64,
    pub degenerate_precision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub fitness: f64,
    pub precision: f64,
    pub generalization: f64,
    pub simplicity: f64,
    pub diagnostics: ReplayDiagnostics,
}

impl QualityReport {
    pub fn get(&self, m: MeasureId) -> f64 {
        match m {
            MeasureId::Fitness => self.fitness,
            MeasureId::Precision => self.precision,
            MeasureId::Generalization => self.generalization,
            MeasureId::Simplicity => self.simplicity,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        MeasureId::ALL.map(|m| self.get(m))
    }
}

/// All four measures from a single replay pass.
pub fn evaluate_all(log: &EventLog, net: &PetriNet) -> Result<QualityReport, QualityError> {
    check(net)?;
    let r = replay(log, net);
    Ok(QualityReport {
        fitness: r.fitness(),
        precision: r.precision(),
        generalization: r.generalization(net),
        simplicity: simplicity(net),
        diagnostics: ReplayDiagnostics {
            produced: r.produced,
            consumed: r.consumed,
            missing: r.missing,
            remaining: r.remaining,
            traces: r.traces,
            fitting_traces: r.fitting_traces,
            degenerate_precision: r.degenerate_precision(),
        },
    })
}
