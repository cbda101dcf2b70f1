//! Labeled place/transition nets with firing semantics, DOT rendering and
//! the JSON form consumed by the net viewer.
//!
//! Nodes are addressed by index internally; string ids exist for rendering
//! and serialization. All arcs have weight one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("transition {0:?} is not enabled")]
    NotEnabled(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("arc {0:?} -> {1:?} must connect a place and a transition")]
    InvalidArc(String, String),
    #[error("{0} marking is empty")]
    EmptyMarking(&'static str),
    #[error("marking has {got} entries, net has {expected} places")]
    MarkingSize { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    /// `None` for silent (τ) transitions.
    pub label: Option<String>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// Token counts indexed by place.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(n_places: usize) -> Self {
        Self(vec![0; n_places])
    }

    pub fn tokens(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn set(&mut self, place: usize, tokens: u32) {
        self.0[place] = tokens;
    }

    pub fn add(&mut self, place: usize, tokens: u32) {
        self.0[place] += tokens;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&t| u64::from(t)).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Non-zero entries as `(place index, tokens)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0)
            .map(|(i, &t)| (i, t))
    }

    /// `true` when every place holds at least as many tokens as in `other`.
    pub fn covers(&self, other: &Marking) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    /// Input places per transition.
    preset: Vec<Vec<usize>>,
    /// Output places per transition.
    postset: Vec<Vec<usize>>,
    initial: Marking,
    final_marking: Marking,
}

impl Default for PetriNet {
    fn default() -> Self {
        Self::new()
    }
}

impl PetriNet {
    pub fn new() -> Self {
        Self {
            places: Vec::new(),
            transitions: Vec::new(),
            preset: Vec::new(),
            postset: Vec::new(),
            initial: Marking::empty(0),
            final_marking: Marking::empty(0),
        }
    }

    pub fn add_place(&mut self, id: impl Into<String>) -> usize {
        self.places.push(id.into());
        self.initial.0.push(0);
        self.final_marking.0.push(0);
        self.places.len() - 1
    }

    pub fn add_transition(&mut self, id: impl Into<String>, label: Option<String>) -> usize {
        self.transitions.push(Transition {
            id: id.into(),
            label,
        });
        self.preset.push(Vec::new());
        self.postset.push(Vec::new());
        self.transitions.len() - 1
    }

    /// Arc place → transition. Duplicate arcs are ignored.
    pub fn add_input_arc(&mut self, place: usize, transition: usize) {
        if !self.preset[transition].contains(&place) {
            self.preset[transition].push(place);
        }
    }

    /// Re-targets every arc `from → t` to `to → t`.
    pub(crate) fn move_consumers(&mut self, from: usize, to: usize) {
        for pre in &mut self.preset {
            if let Some(i) = pre.iter().position(|&p| p == from) {
                if pre.contains(&to) {
                    pre.remove(i);
                } else {
                    pre[i] = to;
                }
            }
        }
    }

    /// Arc transition → place. Duplicate arcs are ignored.
    pub fn add_output_arc(&mut self, transition: usize, place: usize) {
        if !self.postset[transition].contains(&place) {
            self.postset[transition].push(place);
        }
    }

    pub fn set_initial(&mut self, place: usize, tokens: u32) {
        self.initial.set(place, tokens);
    }

    pub fn set_final(&mut self, place: usize, tokens: u32) {
        self.final_marking.set(place, tokens);
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn preset(&self, transition: usize) -> &[usize] {
        &self.preset[transition]
    }

    pub fn postset(&self, transition: usize) -> &[usize] {
        &self.postset[transition]
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn n_arcs(&self) -> usize {
        self.preset.iter().map(Vec::len).sum::<usize>() + self.postset.iter().map(Vec::len).sum::<usize>()
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn labeled_transitions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.transitions.len()).filter(|&t| !self.transitions[t].is_silent())
    }

    /// Transition indices per visible label.
    pub fn label_index(&self) -> HashMap<&str, Vec<usize>> {
        let mut out: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, t) in self.transitions.iter().enumerate() {
            if let Some(l) = &t.label {
                out.entry(l.as_str()).or_default().push(i);
            }
        }
        out
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.preset[t].iter().all(|&p| m.tokens(p) >= 1)
    }

    /// Transitions whose every input place holds a token, in index order.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        if !self.is_enabled(m, t) {
            return Err(NetError::NotEnabled(self.transitions[t].id.clone()));
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.clone();
        for &p in &self.preset[t] {
            next.0[p] -= 1;
        }
        for &p in &self.postset[t] {
            next.0[p] += 1;
        }
        next
    }

    /// Places without incoming arcs.
    pub fn source_places(&self) -> Vec<usize> {
        let mut has_in = vec![false; self.places.len()];
        for post in &self.postset {
            for &p in post {
                has_in[p] = true;
            }
        }
        (0..self.places.len()).filter(|&p| !has_in[p]).collect()
    }

    /// Places without outgoing arcs.
    pub fn sink_places(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.places.len()];
        for pre in &self.preset {
            for &p in pre {
                has_out[p] = true;
            }
        }
        (0..self.places.len()).filter(|&p| !has_out[p]).collect()
    }

    /// Structural workflow-net check: one source place holding the single
    /// initial token, one sink place holding the single final token.
    pub fn is_workflow_net(&self) -> bool {
        let sources = self.source_places();
        let sinks = self.sink_places();
        if sources.len() != 1 || sinks.len() != 1 || sources == sinks {
            return false;
        }
        let mut expected_initial = Marking::empty(self.places.len());
        expected_initial.set(sources[0], 1);
        let mut expected_final = Marking::empty(self.places.len());
        expected_final.set(sinks[0], 1);
        self.initial == expected_initial && self.final_marking == expected_final
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let mut ids = BTreeSet::new();
        for id in self.places.iter().chain(self.transitions.iter().map(|t| &t.id)) {
            if !ids.insert(id.as_str()) {
                return Err(NetError::DuplicateId(id.clone()));
            }
        }
        if self.initial.total() == 0 {
            return Err(NetError::EmptyMarking("initial"));
        }
        if self.final_marking.total() == 0 {
            return Err(NetError::EmptyMarking("final"));
        }
        Ok(())
    }

    /// GraphViz rendering. Nodes are emitted sorted by id, then arcs sorted
    /// by `(source, target)`, so equal nets render byte-identically.
    pub fn to_dot(&self) -> String {
        enum Node<'a> {
            Place(usize),
            Transition(&'a Transition),
        }
        let mut nodes: Vec<(&str, Node)> = self
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), Node::Place(i)))
            .chain(self.transitions.iter().map(|t| (t.id.as_str(), Node::Transition(t))))
            .collect();
        nodes.sort_by(|a, b| a.0.cmp(b.0));

        let mut out = String::from("digraph petri_net {\n  rankdir=LR;\n");
        for (id, node) in &nodes {
            match node {
                Node::Place(i) => {
                    let mut label = String::new();
                    let init = self.initial.tokens(*i);
                    if init > 0 {
                        label = if init == 1 { "●".into() } else { init.to_string() };
                    }
                    let periphery = if self.final_marking.tokens(*i) > 0 { 2 } else { 1 };
                    let _ = writeln!(
                        out,
                        "  \"{}\" [shape=circle, label=\"{}\", peripheries={}];",
                        dot_escape(id),
                        label,
                        periphery
                    );
                }
                Node::Transition(t) => match &t.label {
                    Some(l) => {
                        let _ = writeln!(
                            out,
                            "  \"{}\" [shape=box, label=\"{}\"];",
                            dot_escape(id),
                            dot_escape(l)
                        );
                    }
                    None => {
                        let _ = writeln!(
                            out,
                            "  \"{}\" [shape=box, style=filled, fillcolor=black, label=\"\"];",
                            dot_escape(id)
                        );
                    }
                },
            }
        }
        for (from, to) in self.arc_ids() {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", dot_escape(from), dot_escape(to));
        }
        out.push_str("}\n");
        out
    }

    /// Arcs as `(source id, target id)`, sorted.
    pub fn arc_ids(&self) -> Vec<(&str, &str)> {
        let mut arcs: Vec<(&str, &str)> = Vec::with_capacity(self.n_arcs());
        for (t, tr) in self.transitions.iter().enumerate() {
            for &p in &self.preset[t] {
                arcs.push((self.places[p].as_str(), tr.id.as_str()));
            }
            for &p in &self.postset[t] {
                arcs.push((tr.id.as_str(), self.places[p].as_str()));
            }
        }
        arcs.sort_unstable();
        arcs
    }

    pub fn to_json(&self) -> NetJson {
        let marking = |m: &Marking| -> BTreeMap<String, u32> {
            m.support().map(|(p, t)| (self.places[p].clone(), t)).collect()
        };
        NetJson {
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            arcs: self
                .arc_ids()
                .into_iter()
                .map(|(s, t)| ArcJson {
                    source: s.to_owned(),
                    target: t.to_owned(),
                })
                .collect(),
            initial: marking(&self.initial),
            r#final: marking(&self.final_marking),
        }
    }

    pub fn from_json(json: &NetJson) -> Result<Self, NetError> {
        let mut net = PetriNet::new();
        let mut place_ix = HashMap::new();
        let mut trans_ix = HashMap::new();
        for p in &json.places {
            if place_ix.insert(p.as_str(), net.add_place(p.clone())).is_some() {
                return Err(NetError::DuplicateId(p.clone()));
            }
        }
        for t in &json.transitions {
            if place_ix.contains_key(t.id.as_str())
                || trans_ix
                    .insert(t.id.as_str(), net.add_transition(t.id.clone(), t.label.clone()))
                    .is_some()
            {
                return Err(NetError::DuplicateId(t.id.clone()));
            }
        }
        for arc in &json.arcs {
            let (s, t) = (arc.source.as_str(), arc.target.as_str());
            match (place_ix.get(s), trans_ix.get(t), trans_ix.get(s), place_ix.get(t)) {
                (Some(&p), Some(&tr), _, _) => net.add_input_arc(p, tr),
                (_, _, Some(&tr), Some(&p)) => net.add_output_arc(tr, p),
                _ if !place_ix.contains_key(s) && !trans_ix.contains_key(s) => {
                    return Err(NetError::UnknownNode(s.to_owned()))
                }
                _ if !place_ix.contains_key(t) && !trans_ix.contains_key(t) => {
                    return Err(NetError::UnknownNode(t.to_owned()))
                }
                _ => return Err(NetError::InvalidArc(s.to_owned(), t.to_owned())),
            }
        }
        for (id, &tokens) in &json.initial {
            let p = *place_ix.get(id.as_str()).ok_or_else(|| NetError::UnknownNode(id.clone()))?;
            net.set_initial(p, tokens);
        }
        for (id, &tokens) in &json.r#final {
            let p = *place_ix.get(id.as_str()).ok_or_else(|| NetError::UnknownNode(id.clone()))?;
            net.set_final(p, tokens);
        }
        net.validate()?;
        Ok(net)
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Viewer format: `{places, transitions:[{id,label}], arcs, initial, final}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetJson {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<ArcJson>,
    pub initial: BTreeMap<String, u32>,
    pub r#final: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcJson {
    pub source: String,
    pub target: String,
}
