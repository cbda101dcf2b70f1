//! In-memory event log model and the behavioral abstractions derived from it.
//!
//! An [`EventLog`] is an ordered list of [`Trace`]s, each an ordered list of
//! [`Event`]s carrying an activity label and a UTC timestamp. Everything
//! downstream (features, discovery, replay) works off the activity sequences
//! and the [`DirectlyFollowsGraph`] / [`FootprintMatrix`] built here.

mod abstractions;
mod xes;

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use abstractions::{dfg, footprint, variants, DirectlyFollowsGraph, FootprintMatrix, Relation};
pub use xes::{parse_xes, parse_xes_file, to_jsonl, write_xes, write_xes_gz};

/// Scalar attribute value. Nested XES containers are not represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum AttributeValue {
    String(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Time(DateTime<Utc>),
}

pub type Attributes = BTreeMap<String, AttributeValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub activity: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: Attributes,
}

impl Event {
    pub fn new(activity: impl Into<String>, timestamp: DateTime<Utc>) -> Self {
        Self {
            activity: activity.into(),
            timestamp,
            attributes: Attributes::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    /// Builds a trace, stable-sorting events by timestamp.
    pub fn new(case_id: impl Into<String>, mut events: Vec<Event>) -> Result<Self, LogError> {
        let case_id = case_id.into();
        if events.is_empty() {
            return Err(LogError::EmptyTrace(case_id));
        }
        if events.iter().any(|e| e.activity.is_empty()) {
            return Err(LogError::MissingActivity);
        }
        events.sort_by_key(|e| e.timestamp);
        Ok(Self { case_id, events })
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> + '_ {
        self.events.iter().map(|e| e.activity.as_str())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    traces: Vec<Trace>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: Attributes,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Result<Self, LogError> {
        Self::with_attributes(traces, Attributes::new())
    }

    pub fn with_attributes(traces: Vec<Trace>, attributes: Attributes) -> Result<Self, LogError> {
        if traces.is_empty() {
            return Err(LogError::EmptyLog);
        }
        let mut seen = HashSet::with_capacity(traces.len());
        for t in &traces {
            if t.events.is_empty() {
                return Err(LogError::EmptyTrace(t.case_id.clone()));
            }
            if !seen.insert(t.case_id.as_str()) {
                return Err(LogError::DuplicateCaseId(t.case_id.clone()));
            }
        }
        Ok(Self { traces, attributes })
    }

    /// Convenience constructor for tests and generators: one trace per
    /// activity sequence, case ids `case_<i>`, one-second spaced timestamps.
    pub fn from_sequences<S: AsRef<str>>(sequences: &[Vec<S>]) -> Result<Self, LogError> {
        let origin = DateTime::<Utc>::from_timestamp(1_577_836_800, 0).expect("valid epoch");
        let traces = sequences
            .iter()
            .enumerate()
            .map(|(i, seq)| {
                let events = seq
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        Event::new(
                            a.as_ref(),
                            origin + chrono::Duration::seconds((i * 10_000 + j) as i64),
                        )
                    })
                    .collect();
                Trace::new(format!("case_{i}"), events)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(traces)
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn attributes(&self) -> &Attributes {
        &self.attributes
    }

    pub fn n_events(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    /// Activity sequences in trace order.
    pub fn sequences(&self) -> Vec<Vec<&str>> {
        self.traces.iter().map(|t| t.activities().collect()).collect()
    }

    /// Sorted distinct activity labels.
    pub fn activities(&self) -> Vec<String> {
        self.traces
            .iter()
            .flat_map(|t| t.activities())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(str::to_owned)
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("event without a concept:name activity")]
    MissingActivity,
    #[error("event without a time:timestamp")]
    MissingTimestamp,
    #[error("unparseable timestamp {0:?}")]
    InvalidTimestamp(String),
    #[error("log contains no traces")]
    EmptyLog,
    #[error("trace {0:?} contains no events")]
    EmptyTrace(String),
    #[error("duplicate case id {0:?}")]
    DuplicateCaseId(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl LogError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            LogError::MalformedXml(_) => "MalformedXml",
            LogError::MissingActivity => "MissingActivity",
            LogError::MissingTimestamp => "MissingTimestamp",
            LogError::InvalidTimestamp(_) => "InvalidTimestamp",
            LogError::EmptyLog => "EmptyLog",
            LogError::EmptyTrace(_) => "EmptyTrace",
            LogError::DuplicateCaseId(_) => "DuplicateCaseId",
            LogError::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for LogError {
    fn from(e: std::io::Error) -> Self {
        LogError::Io(e.to_string())
    }
}
