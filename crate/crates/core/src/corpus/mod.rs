//! Synthetic training logs: random block-structured process trees, noisy
//! playout, and the labeled (log × algorithm) quality grid.

mod build;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{Operator, ProcessTree};
use crate::event_log::EventLog;

pub use build::{
    build_corpus, build_corpus_from, cross_validate_all, label_log, read_corpus, train_bundle, write_corpus, CorpusLog, LabelRow,
    LabeledCorpus, LoadedCorpus, Provenance,
};

/// Maximum redo iterations of a loop during playout.
pub const MAX_LOOP_REDOS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("corpus io: {0}")]
    Io(String),
    #[error("corpus data: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorProbabilities {
    pub sequence: f64,
    pub xor: f64,
    pub parallel: f64,
    #[serde(rename = "loop")]
    pub loop_: f64,
}

impl Default for OperatorProbabilities {
    fn default() -> Self {
        Self {
            sequence: 0.4,
            xor: 0.25,
            parallel: 0.2,
            loop_: 0.15,
        }
    }
}

/// Omitted fields take their defaults when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_logs: usize,
    /// Inclusive `[min, max]`.
    pub n_activities: [usize; 2],
    /// Inclusive `[min, max]`; leaves have depth 0.
    pub depth: [usize; 2],
    pub operators: OperatorProbabilities,
    pub n_traces: [usize; 2],
    /// Per-trace probability of one noise edit.
    pub noise: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_logs: 100,
            n_activities: [5, 12],
            depth: [2, 4],
            operators: OperatorProbabilities::default(),
            n_traces: [50, 200],
            noise: 0.1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidConfig(m.to_owned()));
        let p = self.operators;
        let probs = [p.sequence, p.xor, p.parallel, p.loop_];
        if probs.iter().any(|v| !(0.0..=1.0).contains(v)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("operator probabilities must lie in [0, 1] and sum to 1");
        }
        if p.loop_ == 1.0 {
            return bad("loop probability 1 cannot produce trees of arbitrary size");
        }
        for (name, r) in [("n_activities", self.n_activities), ("depth", self.depth), ("n_traces", self.n_traces)] {
            if r[0] > r[1] {
                return bad(&format!("{name} range is empty"));
            }
        }
        if self.depth[0] == 0 {
            return bad("depth must be at least 1");
        }
        if self.n_activities[0] < self.depth[1] + 1 {
            return bad("n_activities minimum must exceed the maximum depth");
        }
        if self.n_traces[0] == 0 {
            return bad("logs need at least one trace");
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must be in [0, 1]");
        }
        Ok(())
    }
}

fn label(i: usize) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    if i < LETTERS.len() {
        (LETTERS[i] as char).to_string()
    } else {
        format!("a{i}")
    }
}

struct TreeGen<'a> {
    rng: ChaCha8Rng,
    probs: &'a OperatorProbabilities,
    next_label: usize,
}

impl TreeGen<'_> {
    fn operator(&mut self, allow_loop: bool) -> Operator {
        let p = self.probs;
        let mut options = vec![
            (Operator::Sequence, p.sequence),
            (Operator::ExclusiveChoice, p.xor),
            (Operator::Parallel, p.parallel),
        ];
        if allow_loop {
            options.push((Operator::Loop, p.loop_));
        }
        let total: f64 = options.iter().map(|o| o.1).sum();
        if total <= 0.0 {
            // Only loops were allowed by the probabilities; fall back to sequence.
            return Operator::Sequence;
        }
        let mut r = self.rng.gen::<f64>() * total;
        for (op, w) in &options {
            if r < *w {
                return *op;
            }
            r -= w;
        }
        options.iter().rev().find(|o| o.1 > 0.0).expect("positive weight").0
    }

    fn leaf(&mut self) -> ProcessTree {
        let t = ProcessTree::activity(label(self.next_label));
        self.next_label += 1;
        t
    }

    /// Tree of exactly `depth` with exactly `leaves` activity leaves;
    /// requires `leaves >= depth + 1` (or `leaves == 1` at depth 0).
    fn tree(&mut self, depth: usize, leaves: usize) -> ProcessTree {
        if depth == 0 {
            return self.leaf();
        }
        if depth == 1 {
            let op = self.operator(leaves == 2);
            return ProcessTree::Operator(op, (0..leaves).map(|_| self.leaf()).collect());
        }
        let op = self.operator(true);
        let arity = if op == Operator::Loop {
            2
        } else {
            self.rng.gen_range(2..=4.min(leaves - depth + 1))
        };
        // The first child carries the full remaining depth.
        let mut depths = vec![depth - 1];
        // Leaves left after every child got its minimum; a child of depth e
        // needs e of them on top of its own leaf.
        let mut budget = leaves - depth - (arity - 1);
        for _ in 1..arity {
            let e = self.rng.gen_range(0..=budget.min(depth - 1));
            budget -= e;
            depths.push(e);
        }
        let mut alloc: Vec<usize> = depths.iter().map(|&d| d + 1).collect();
        let mut spare = leaves - alloc.iter().sum::<usize>();
        // Leaf children cannot absorb extra leaves; the spine child always can.
        let growable: Vec<usize> = (0..arity).filter(|&i| depths[i] > 0).collect();
        while spare > 0 {
            let i = *growable.choose(&mut self.rng).expect("non-empty");
            alloc[i] += 1;
            spare -= 1;
        }
        let mut children: Vec<ProcessTree> = depths.iter().zip(&alloc).map(|(&d, &n)| self.tree(d, n)).collect();
        if op != Operator::Loop {
            children.shuffle(&mut self.rng);
        } else if self.rng.gen_bool(0.5) {
            children.swap(0, 1);
        }
        ProcessTree::Operator(op, children)
    }
}

/// Random tree with depth and alphabet size drawn from the config ranges,
/// distinct activity labels, deterministic per seed.
pub fn random_tree(config: &GeneratorConfig, seed: u64) -> ProcessTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.gen_range(config.depth[0]..=config.depth[1]);
    let leaves = rng.gen_range(config.n_activities[0].max(depth + 1)..=config.n_activities[1].max(depth + 1));
    let mut g = TreeGen {
        rng,
        probs: &config.operators,
        next_label: 0,
    };
    g.tree(depth, leaves)
}

fn play(tree: &ProcessTree, rng: &mut ChaCha8Rng, out: &mut Vec<String>) {
    match tree {
        ProcessTree::Activity(l) => out.push(l.clone()),
        ProcessTree::Silent => {}
        ProcessTree::Operator(Operator::Sequence, c) => c.iter().for_each(|ch| play(ch, rng, out)),
        ProcessTree::Operator(Operator::ExclusiveChoice, c) => {
            let ch = c.choose(rng).expect("operator has children");
            play(ch, rng, out);
        }
        ProcessTree::Operator(Operator::Parallel, c) => {
            let mut parts: Vec<std::collections::VecDeque<String>> = c
                .iter()
                .map(|ch| {
                    let mut v = Vec::new();
                    play(ch, rng, &mut v);
                    v.into()
                })
                .collect();
            // Uniform random interleaving: pick a branch with probability
            // proportional to its remaining length.
            let mut left: usize = parts.iter().map(|p| p.len()).sum();
            while left > 0 {
                let mut r = rng.gen_range(0..left);
                for p in parts.iter_mut() {
                    if r < p.len() {
                        out.push(p.pop_front().expect("non-empty"));
                        break;
                    }
                    r -= p.len();
                }
                left -= 1;
            }
        }
        ProcessTree::Operator(Operator::Loop, c) => {
            play(&c[0], rng, out);
            let mut redos = 0;
            while redos < MAX_LOOP_REDOS && rng.gen_bool(0.5) {
                play(&c[1], rng, out);
                play(&c[0], rng, out);
                redos += 1;
            }
        }
    }
}

fn add_noise(trace: &mut Vec<String>, rng: &mut ChaCha8Rng) {
    let kind = rng.gen_range(0..3);
    match kind {
        0 if trace.len() > 1 => {
            let i = rng.gen_range(0..trace.len());
            trace.remove(i);
        }
        1 if trace.len() > 1 => {
            let i = rng.gen_range(0..trace.len() - 1);
            trace.swap(i, i + 1);
        }
        _ => {
            let i = rng.gen_range(0..=trace.len());
            trace.insert(i, format!("alien_{}", rng.gen_range(0..3)));
        }
    }
}

/// `n_traces` random executions of `tree`; with probability `noise` a trace
/// gets one edit (drop an event, swap two adjacent events or insert an
/// alien activity). Timestamps increase within and across traces.
pub fn playout(tree: &ProcessTree, n_traces: usize, noise: f64, seed: u64) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seqs: Vec<Vec<String>> = Vec::with_capacity(n_traces);
    while seqs.len() < n_traces {
        let mut t = Vec::new();
        play(tree, &mut rng, &mut t);
        if t.is_empty() {
            // Only possible for trees with silent leaves; such runs are skipped.
            continue;
        }
        if noise > 0.0 && rng.gen_bool(noise) {
            add_noise(&mut t, &mut rng);
        }
        seqs.push(t);
    }
    EventLog::from_sequences(&seqs).expect("non-empty traces with unique ids")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_json() {
        let c: GeneratorConfig = serde_json::from_str(r#"{"seed": 7, "n_logs": 300}"#).unwrap();
        assert_eq!((c.seed, c.n_logs), (7, 300));
        assert_eq!(c.n_traces, GeneratorConfig::default().n_traces);
        assert!(serde_json::from_str::<GeneratorConfig>(r#"{"n_log": 3}"#).is_err());
    }

    fn cfg(depth: [usize; 2]) -> GeneratorConfig {
        GeneratorConfig {
            depth,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn depth_and_alphabet_within_ranges() {
        let c = cfg([1, 5]);
        c.validate().unwrap_err();
        let c = GeneratorConfig {
            n_activities: [6, 10],
            ..cfg([1, 5])
        };
        c.validate().unwrap();
        for seed in 0..200 {
            let t = random_tree(&c, seed);
            assert!(t.is_valid(), "{t}");
            assert!((1..=5).contains(&t.depth()), "{t}");
            let labels = t.labels();
            assert!((6..=10).contains(&labels.len()));
            let distinct: std::collections::BTreeSet<_> = labels.iter().collect();
            assert_eq!(distinct.len(), labels.len());
        }
    }

    #[test]
    fn depth_one_is_flat() {
        let c = cfg([1, 1]);
        for seed in 0..20 {
            match random_tree(&c, seed) {
                ProcessTree::Operator(_, ch) => assert!(ch.iter().all(|x| matches!(x, ProcessTree::Activity(_)))),
                t => panic!("{t}"),
            }
        }
    }

    #[test]
    fn determinism_and_loop_exclusion() {
        let c = cfg([2, 4]);
        assert_eq!(random_tree(&c, 5), random_tree(&c, 5));
        let no_loop = GeneratorConfig {
            operators: OperatorProbabilities {
                sequence: 0.5,
                xor: 0.3,
                parallel: 0.2,
                loop_: 0.0,
            },
            ..c
        };
        for seed in 0..100 {
            assert!(!random_tree(&no_loop, seed).contains_operator(Operator::Loop));
        }
    }

    #[test]
    fn playout_languages() {
        let seq = ProcessTree::seq(vec![ProcessTree::activity("a"), ProcessTree::activity("b")]);
        let log = playout(&seq, 20, 0.0, 1);
        assert!(log.sequences().iter().all(|s| s == &vec!["a", "b"]));
        let xor = ProcessTree::xor(vec![ProcessTree::activity("b"), ProcessTree::activity("c")]);
        let log = playout(&xor, 200, 0.0, 1);
        let seqs = log.sequences();
        assert!(seqs.contains(&vec!["b"]) && seqs.contains(&vec!["c"]));
    }

    #[test]
    fn loop_redos_are_capped() {
        let t = ProcessTree::looped(ProcessTree::activity("a"), ProcessTree::activity("b"));
        let log = playout(&t, 500, 0.0, 3);
        assert!(log.traces().iter().all(|t| t.len() <= 2 * MAX_LOOP_REDOS + 1));
        assert!(log.traces().iter().any(|t| t.len() == 2 * MAX_LOOP_REDOS + 1));
    }

    #[test]
    fn noise_edits_traces() {
        let seq = ProcessTree::seq((0..5).map(|i| ProcessTree::activity(label(i))).collect());
        let log = playout(&seq, 300, 1.0, 4);
        assert!(log.sequences().iter().all(|s| s != &vec!["a", "b", "c", "d", "e"]));
        assert!(log.activities().iter().any(|a| a.starts_with("alien_")));
    }
}
