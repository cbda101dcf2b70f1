use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EventLog;

/// Distinct activity sequences with their trace counts.
pub fn variants(log: &EventLog) -> BTreeMap<Vec<String>, usize> {
    let mut out: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for t in log.traces() {
        let seq: Vec<String> = t.activities().map(str::to_owned).collect();
        *out.entry(seq).or_default() += 1;
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectlyFollowsGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), usize>,
    pub start_activities: BTreeMap<String, usize>,
    pub end_activities: BTreeMap<String, usize>,
}

impl DirectlyFollowsGraph {
    pub fn edge_count(&self, from: &str, to: &str) -> usize {
        self.edges
            .get(&(from.to_owned(), to.to_owned()))
            .copied()
            .unwrap_or(0)
    }

    pub fn follows(&self, from: &str, to: &str) -> bool {
        self.edge_count(from, to) > 0
    }

    pub fn successors<'a>(&'a self, from: &'a str) -> impl Iterator<Item = (&'a str, usize)> + 'a {
        self.edges
            .iter()
            .filter(move |((a, _), _)| a == from)
            .map(|((_, b), c)| (b.as_str(), *c))
    }
}

pub fn dfg(log: &EventLog) -> DirectlyFollowsGraph {
    let mut g = DirectlyFollowsGraph::default();
    for t in log.traces() {
        let acts: Vec<&str> = t.activities().collect();
        for a in &acts {
            g.nodes.insert((*a).to_owned());
        }
        if let (Some(first), Some(last)) = (acts.first(), acts.last()) {
            *g.start_activities.entry((*first).to_owned()).or_default() += 1;
            *g.end_activities.entry((*last).to_owned()).or_default() += 1;
        }
        for w in acts.windows(2) {
            *g.edges.entry((w[0].to_owned(), w[1].to_owned())).or_default() += 1;
        }
    }
    g
}

/// Footprint relation between an ordered pair of activities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `a → b`: a is directly followed by b, never the reverse.
    Sequence,
    /// `a ← b`
    ReverseSequence,
    /// `a ‖ b`: observed in both directions.
    Parallel,
    /// `a # b`: never adjacent.
    Choice,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Sequence => "→",
            Relation::ReverseSequence => "←",
            Relation::Parallel => "‖",
            Relation::Choice => "#",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootprintMatrix {
    activities: Vec<String>,
    relations: Vec<Vec<Relation>>,
}

impl FootprintMatrix {
    pub fn from_dfg(g: &DirectlyFollowsGraph) -> Self {
        let activities: Vec<String> = g.nodes.iter().cloned().collect();
        let n = activities.len();
        let index: BTreeMap<&str, usize> = activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i))
            .collect();
        let mut df = vec![vec![false; n]; n];
        for (a, b) in g.edges.keys() {
            df[index[a.as_str()]][index[b.as_str()]] = true;
        }
        let relations = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (df[i][j], df[j][i]) {
                        (true, false) => Relation::Sequence,
                        (false, true) => Relation::ReverseSequence,
                        (true, true) => Relation::Parallel,
                        (false, false) => Relation::Choice,
                    })
                    .collect()
            })
            .collect();
        Self {
            activities,
            relations,
        }
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn index_of(&self, activity: &str) -> Option<usize> {
        self.activities
            .binary_search_by(|a| a.as_str().cmp(activity))
            .ok()
    }

    /// Relation by position in [`activities`](Self::activities).
    pub fn at(&self, i: usize, j: usize) -> Relation {
        self.relations[i][j]
    }

    /// Relation by label; `None` if either activity is unknown.
    pub fn relation(&self, a: &str, b: &str) -> Option<Relation> {
        Some(self.at(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }
}

pub fn footprint(log: &EventLog) -> FootprintMatrix {
    FootprintMatrix::from_dfg(&dfg(log))
}
