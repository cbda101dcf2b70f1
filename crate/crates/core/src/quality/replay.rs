//! Token replay over a prefix tree of the log, so traces sharing a prefix
//! are replayed once and precision can read observed continuations off the
//! tree.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rayon::prelude::*;

use crate::event_log::EventLog;
use crate::petri_net::{Marking, PetriNet};

/// Maximum number of silent firings searched to enable the next label or
/// to reach the final marking.
pub const SILENT_SEARCH_DEPTH: usize = 10;

/// Bound on markings visited by one silent search.
const SILENT_SEARCH_STATES: usize = 20_000;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayResult {
    pub produced: u64,
    pub consumed: u64,
    pub missing: u64,
    pub remaining: u64,
    pub traces: u64,
    pub fitting_traces: u64,
    /// Firings per transition, weighted by trace count.
    pub executions: Vec<u64>,
    /// Σ weight · |allowed \ observed| over fitting prefix states.
    pub escaping: u64,
    /// Σ weight · |allowed| over fitting prefix states.
    pub allowed: u64,
}

impl ReplayResult {
    pub fn fitness(&self) -> f64 {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let f = 0.5 * (1.0 - ratio(self.missing, self.consumed)) + 0.5 * (1.0 - ratio(self.remaining, self.produced));
        f.clamp(0.0, 1.0)
    }

    pub fn degenerate_precision(&self) -> bool {
        self.allowed == 0
    }

    pub fn precision(&self) -> f64 {
        if self.allowed == 0 {
            return 1.0;
        }
        (1.0 - self.escaping as f64 / self.allowed as f64).clamp(0.0, 1.0)
    }

    /// `1 - mean(exec(t)^-1/2)` over labeled transitions, unfired ones
    /// contributing 1; 0 for nets without labeled transitions.
    pub fn generalization(&self, net: &PetriNet) -> f64 {
        let labeled: Vec<usize> = net.labeled_transitions().collect();
        if labeled.is_empty() {
            return 0.0;
        }
        let sum: f64 = labeled
            .iter()
            .map(|&t| match self.executions.get(t).copied().unwrap_or(0) {
                0 => 1.0,
                n => 1.0 / (n as f64).sqrt(),
            })
            .sum();
        (1.0 - sum / labeled.len() as f64).clamp(0.0, 1.0)
    }

    fn merge(&mut self, other: ReplayResult) {
        self.produced += other.produced;
        self.consumed += other.consumed;
        self.missing += other.missing;
        self.remaining += other.remaining;
        self.traces += other.traces;
        self.fitting_traces += other.fitting_traces;
        self.escaping += other.escaping;
        self.allowed += other.allowed;
        for (a, b) in self.executions.iter_mut().zip(other.executions) {
            *a += b;
        }
    }
}

#[derive(Default)]
struct TrieNode {
    children: BTreeMap<String, TrieNode>,
    /// Traces passing through this prefix.
    through: u64,
    /// Traces ending exactly here.
    ending: u64,
}

impl TrieNode {
    fn insert(&mut self, trace: &[&str]) {
        self.through += 1;
        match trace.split_first() {
            None => self.ending += 1,
            Some((head, rest)) => self.children.entry((*head).to_owned()).or_default().insert(rest),
        }
    }
}

struct Replayer<'a> {
    net: &'a PetriNet,
    by_label: HashMap<&'a str, Vec<usize>>,
    silent: Vec<usize>,
}

/// Token counters for one path through the trie; multiplied by the number
/// of traces that take it.
#[derive(Clone, Copy, Default)]
struct Tokens {
    produced: u64,
    consumed: u64,
    missing: u64,
}

impl<'a> Replayer<'a> {
    fn new(net: &'a PetriNet) -> Self {
        let silent = (0..net.transitions().len())
            .filter(|&t| net.transitions()[t].is_silent())
            .collect();
        Self {
            net,
            by_label: net.label_index(),
            silent,
        }
    }

    /// Shortest sequence of silent firings from `m` to a marking satisfying
    /// `goal`, breadth-first, ties resolved by transition index.
    fn silent_path(&self, m: &Marking, goal: impl Fn(&Marking) -> bool) -> Option<Vec<usize>> {
        if goal(m) {
            return Some(Vec::new());
        }
        let mut seen: HashSet<Marking> = HashSet::from([m.clone()]);
        let mut queue: VecDeque<(Marking, Vec<usize>)> = VecDeque::from([(m.clone(), Vec::new())]);
        while let Some((cur, path)) = queue.pop_front() {
            if path.len() >= SILENT_SEARCH_DEPTH {
                continue;
            }
            for &t in &self.silent {
                if !self.net.is_enabled(&cur, t) {
                    continue;
                }
                let next = self.net.fire_unchecked(&cur, t);
                if seen.contains(&next) {
                    continue;
                }
                let mut p = path.clone();
                p.push(t);
                if goal(&next) {
                    return Some(p);
                }
                if seen.len() >= SILENT_SEARCH_STATES {
                    return None;
                }
                seen.insert(next.clone());
                queue.push_back((next, p));
            }
        }
        None
    }

    /// Labels that can fire after silent moves only.
    fn allowed_labels(&self, m: &Marking) -> BTreeSet<&'a str> {
        let mut out = BTreeSet::new();
        let mut seen: HashSet<Marking> = HashSet::from([m.clone()]);
        let mut frontier = vec![m.clone()];
        for depth in 0..=SILENT_SEARCH_DEPTH {
            let mut next_frontier = Vec::new();
            for cur in &frontier {
                for (label, ts) in &self.by_label {
                    if ts.iter().any(|&t| self.net.is_enabled(cur, t)) {
                        out.insert(*label);
                    }
                }
                if depth == SILENT_SEARCH_DEPTH {
                    continue;
                }
                for &t in &self.silent {
                    if self.net.is_enabled(cur, t) && seen.len() < SILENT_SEARCH_STATES {
                        let next = self.net.fire_unchecked(cur, t);
                        if seen.insert(next.clone()) {
                            next_frontier.push(next);
                        }
                    }
                }
            }
            if next_frontier.is_empty() {
                break;
            }
            frontier = next_frontier;
        }
        out
    }

    fn fire(&self, m: &mut Marking, t: usize, tok: &mut Tokens, exec: &mut [u64]) {
        for &p in self.net.preset(t) {
            if m.tokens(p) == 0 {
                tok.missing += 1;
                m.add(p, 1);
            }
        }
        *m = self.net.fire_unchecked(m, t);
        tok.consumed += self.net.preset(t).len() as u64;
        tok.produced += self.net.postset(t).len() as u64;
        exec[t] += 1;
    }

    /// Replays one event: fire an enabled transition with the label, else
    /// the shortest silent detour that enables one, else force the
    /// transition needing the fewest missing tokens.
    fn step(&self, m: &mut Marking, label: &str, tok: &mut Tokens, exec: &mut [u64]) {
        let Some(candidates) = self.by_label.get(label) else {
            tok.missing += 1;
            tok.consumed += 1;
            return;
        };
        if let Some(&t) = candidates.iter().find(|&&t| self.net.is_enabled(m, t)) {
            self.fire(m, t, tok, exec);
            return;
        }
        if let Some(path) = self.silent_path(m, |x| candidates.iter().any(|&t| self.net.is_enabled(x, t))) {
            for s in path {
                self.fire(m, s, tok, exec);
            }
            let t = *candidates
                .iter()
                .find(|&&t| self.net.is_enabled(m, t))
                .expect("silent path enables a candidate");
            self.fire(m, t, tok, exec);
            return;
        }
        let t = *candidates
            .iter()
            .min_by_key(|&&t| self.net.preset(t).iter().filter(|&&p| m.tokens(p) == 0).count())
            .expect("label has transitions");
        self.fire(m, t, tok, exec);
    }

    /// Closes a trace: silent moves towards the final marking, then the
    /// final marking is consumed. Returns `(missing, consumed, remaining)`
    /// plus silent-firing token counts folded into `tok`.
    fn finish(&self, m: &Marking, tok: &mut Tokens, exec: &mut [u64]) -> (u64, u64, u64) {
        let fin = self.net.final_marking();
        let mut m = m.clone();
        if let Some(path) = self.silent_path(&m, |x| x == fin) {
            for s in path {
                self.fire(&mut m, s, tok, exec);
            }
        }
        let mut missing = 0;
        for (p, need) in fin.support() {
            let have = m.tokens(p);
            if have < need {
                missing += u64::from(need - have);
                m.set(p, 0);
            } else {
                m.set(p, have - need);
            }
        }
        (missing, fin.total(), m.total())
    }

    fn walk(&self, node: &TrieNode, m: &Marking, tok: Tokens, fitting: bool, out: &mut ReplayResult) {
        if node.ending > 0 {
            let mut t = tok;
            let mut exec = vec![0u64; self.net.transitions().len()];
            let (miss, cons, rem) = self.finish(m, &mut t, &mut exec);
            let w = node.ending;
            out.produced += w * t.produced;
            out.consumed += w * (t.consumed + cons);
            out.missing += w * (t.missing + miss);
            out.remaining += w * rem;
            out.traces += w;
            if t.missing + miss == 0 && rem == 0 {
                out.fitting_traces += w;
            }
            for (e, x) in out.executions.iter_mut().zip(exec) {
                *e += w * x;
            }
        }
        if node.children.is_empty() {
            return;
        }
        if fitting {
            let allowed = self.allowed_labels(m);
            let observed: BTreeSet<&str> = node.children.keys().map(String::as_str).collect();
            let w = node.through - node.ending;
            out.allowed += w * allowed.len() as u64;
            out.escaping += w * allowed.iter().filter(|a| !observed.contains(*a)).count() as u64;
        }
        for (label, child) in &node.children {
            let mut cm = m.clone();
            let mut ct = tok;
            let mut exec = vec![0u64; self.net.transitions().len()];
            self.step(&mut cm, label, &mut ct, &mut exec);
            // Firings on this edge are shared by every trace below it.
            for (e, x) in out.executions.iter_mut().zip(exec) {
                *e += child.through * x;
            }
            let still_fitting = fitting && ct.missing == tok.missing;
            self.walk(child, &cm, ct, still_fitting, out);
        }
    }
}

/// Replays every trace of `log` on `net` once. First-level subtrees of the
/// prefix tree are processed in parallel; all counters are integers, so the
/// sum does not depend on scheduling.
pub fn replay(log: &EventLog, net: &PetriNet) -> ReplayResult {
    let mut root = TrieNode::default();
    for t in log.traces() {
        let acts: Vec<&str> = t.activities().collect();
        root.insert(&acts);
    }
    let r = Replayer::new(net);
    let n_t = net.transitions().len();
    let init = net.initial_marking().clone();
    let start = Tokens {
        produced: init.total(),
        ..Tokens::default()
    };
    let blank = || ReplayResult {
        executions: vec![0; n_t],
        ..ReplayResult::default()
    };

    let mut total = blank();
    // Precision state at the empty prefix.
    let allowed = r.allowed_labels(&init);
    let observed: BTreeSet<&str> = root.children.keys().map(String::as_str).collect();
    let w = root.through - root.ending;
    total.allowed += w * allowed.len() as u64;
    total.escaping += w * allowed.iter().filter(|a| !observed.contains(*a)).count() as u64;

    let parts: Vec<ReplayResult> = root
        .children
        .par_iter()
        .map(|(label, child)| {
            let mut out = blank();
            let mut m = init.clone();
            let mut tok = start;
            let mut exec = vec![0u64; n_t];
            r.step(&mut m, label, &mut tok, &mut exec);
            for (e, x) in out.executions.iter_mut().zip(exec) {
                *e += child.through * x;
            }
            let fitting = tok.missing == 0;
            r.walk(child, &m, tok, fitting, &mut out);
            out
        })
        .collect();
    for p in parts {
        total.merge(p);
    }
    total
}
