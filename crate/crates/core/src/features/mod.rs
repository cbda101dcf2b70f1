//! Fixed-schema feature extraction, the feature catalog and
//! correlation-based redundancy pruning.

mod catalog;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::event_log::{dfg, variants, EventLog, FootprintMatrix, Relation};

pub use catalog::{feature_catalog, feature_names, lookup, FeatureDescriptor, FeatureSource, CATALOG_VERSION};

pub const N_FEATURES: usize = catalog::SCHEMA.len();

/// Default `|r|` at or above which a later feature is considered redundant.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("feature csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub log_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn with_log_id(mut self, log_id: impl Into<String>) -> Self {
        self.log_id = log_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(name, value)` pairs in catalog order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        feature_names().into_iter().zip(self.values.iter().copied()).collect()
    }
}

/// Identifier derived from the activity sequences only, so that renaming
/// cases does not change it.
fn behavioral_id(log: &EventLog) -> String {
    let mut h = Sha256::new();
    for t in log.traces() {
        for a in t.activities() {
            h.update(a.as_bytes());
            h.update([0x1f]);
        }
        h.update([0x1e]);
    }
    format!("log-{}", &hex::encode(h.finalize())[..16])
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn pop_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if m2 <= f64::EPSILON * m.abs().max(1.0) {
        return 0.0;
    }
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Linear-interpolation percentile of already sorted data, `q` in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Shannon entropy in bits of a count distribution.
fn entropy(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Summarizes `log` as the 48-value vector described by [`feature_catalog`].
pub fn extract(log: &EventLog) -> FeatureVector {
    let traces = log.traces();
    let n_cases = traces.len() as f64;
    let n_events = log.n_events() as f64;

    let mut act_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut act_case_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut distinct_per_case = Vec::with_capacity(traces.len());
    let mut with_repetition = 0usize;
    for t in traces {
        let mut seen = BTreeSet::new();
        for a in t.activities() {
            *act_counts.entry(a).or_default() += 1;
            seen.insert(a);
        }
        for a in &seen {
            *act_case_counts.entry(a).or_default() += 1;
        }
        if seen.len() < t.len() {
            with_repetition += 1;
        }
        distinct_per_case.push(seen.len() as f64);
    }
    let n_activities = act_counts.len() as f64;

    let var = variants(log);
    let n_variants = var.len() as f64;

    let mut lengths: Vec<f64> = traces.iter().map(|t| t.len() as f64).collect();
    lengths.sort_by(f64::total_cmp);
    let tl_mean = mean(&lengths);
    let tl_std = pop_std(&lengths);
    let p25 = percentile(&lengths, 0.25);
    let p75 = percentile(&lengths, 0.75);

    let mut freqs: Vec<f64> = act_counts.values().map(|&c| c as f64).collect();
    freqs.sort_by(f64::total_cmp);

    let g = dfg(log);

    let mut variant_counts: Vec<usize> = var.values().copied().collect();
    variant_counts.sort_unstable_by(|a, b| b.cmp(a));
    let top_k = (variant_counts.len() as f64 * 0.1).ceil() as usize;
    let top_cover: usize = variant_counts.iter().take(top_k.max(1)).sum();
    let variant_lengths: Vec<f64> = var.keys().map(|k| k.len() as f64).collect();

    // DFG structure
    let node_index: HashMap<&str, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let mut out_degree = vec![0usize; g.nodes.len()];
    let mut graph = DiGraph::<(), ()>::new();
    let ids: Vec<_> = (0..g.nodes.len()).map(|_| graph.add_node(())).collect();
    let mut self_loops = BTreeSet::new();
    let mut non_loop_edges = 0usize;
    let mut reciprocal = 0usize;
    for (a, b) in g.edges.keys() {
        let (ia, ib) = (node_index[a.as_str()], node_index[b.as_str()]);
        out_degree[ia] += 1;
        graph.add_edge(ids[ia], ids[ib], ());
        if ia == ib {
            self_loops.insert(ia);
        } else {
            non_loop_edges += 1;
            if g.follows(b, a) {
                reciprocal += 1;
            }
        }
    }
    let mut in_cycle: BTreeSet<usize> = self_loops.clone();
    for scc in tarjan_scc(&graph) {
        if scc.len() > 1 {
            in_cycle.extend(scc.iter().map(|n| n.index()));
        }
    }
    let degrees: Vec<f64> = out_degree.iter().map(|&d| d as f64).collect();
    let max_edge = g.edges.values().copied().max().unwrap_or(0) as f64;

    // Footprint
    let fp = FootprintMatrix::from_dfg(&g);
    let n = fp.len();
    let (mut seq_pairs, mut par_pairs, mut choice_pairs) = (0usize, 0usize, 0usize);
    let mut self_parallel = 0usize;
    let mut seq_in = vec![0usize; n];
    let mut seq_out = vec![0usize; n];
    for i in 0..n {
        if fp.at(i, i) == Relation::Parallel {
            self_parallel += 1;
        }
        for j in 0..n {
            if fp.at(i, j) == Relation::Sequence {
                seq_out[i] += 1;
                seq_in[j] += 1;
            }
            if j <= i {
                continue;
            }
            match fp.at(i, j) {
                Relation::Sequence | Relation::ReverseSequence => seq_pairs += 1,
                Relation::Parallel => par_pairs += 1,
                Relation::Choice => choice_pairs += 1,
            }
        }
    }
    let n_pairs = (n * n.saturating_sub(1) / 2) as f64;
    let chains: usize = (0..n).map(|b| seq_in[b] * seq_out[b]).sum();

    let values = vec![
        n_events,
        n_cases,
        n_activities,
        n_variants,
        n_events / n_cases,
        n_variants / n_cases,
        mean(&distinct_per_case),
        lengths[0],
        lengths[lengths.len() - 1],
        tl_mean,
        percentile(&lengths, 0.5),
        tl_std,
        p25,
        p75,
        p75 - p25,
        ratio(tl_std, tl_mean),
        skewness(&lengths),
        freqs[0],
        freqs[freqs.len() - 1],
        mean(&freqs),
        percentile(&freqs, 0.5),
        pop_std(&freqs),
        g.start_activities.len() as f64,
        g.end_activities.len() as f64,
        entropy(act_counts.values().copied()),
        ratio(
            act_case_counts.values().filter(|&&c| c == traces.len()).count() as f64,
            n_activities,
        ),
        variant_counts[0] as f64 / n_cases,
        top_cover as f64 / n_cases,
        entropy(variant_counts.iter().copied()),
        ratio(variant_counts.iter().filter(|&&c| c == 1).count() as f64, n_variants),
        mean(&variant_lengths),
        pop_std(&variant_lengths),
        with_repetition as f64 / n_cases,
        g.edges.len() as f64,
        ratio(g.edges.len() as f64, n_activities * n_activities),
        degrees.iter().copied().fold(0.0, f64::max),
        mean(&degrees),
        self_loops.len() as f64,
        in_cycle.len() as f64,
        ratio(reciprocal as f64, non_loop_edges as f64),
        ratio(max_edge, n_events),
        g.start_activities.len() as f64,
        g.end_activities.len() as f64,
        ratio(seq_pairs as f64, n_pairs),
        ratio(par_pairs as f64, n_pairs),
        ratio(choice_pairs as f64, n_pairs),
        ratio(self_parallel as f64, n as f64),
        chains as f64,
    ];
    debug_assert_eq!(values.len(), N_FEATURES);
    let values = values
        .into_iter()
        .map(|v| if v.is_finite() { v } else { 0.0 })
        .collect();
    FeatureVector {
        log_id: behavioral_id(log),
        values,
    }
}

/// Sample Pearson correlation. Zero variance in either input yields 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, FeatureError> {
    if x.len() != y.len() {
        return Err(FeatureError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(FeatureError::TooFewSamples(x.len()));
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Greedy catalog-order pass over the columns of `rows`: a column is dropped
/// when `|r| >= threshold` against any column already retained.
pub fn prune_columns(rows: &[Vec<f64>], threshold: f64) -> Result<Vec<usize>, FeatureError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(FeatureError::InvalidThreshold(threshold));
    }
    if rows.len() < 2 {
        return Err(FeatureError::TooFewSamples(rows.len()));
    }
    let width = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != width) {
        return Err(FeatureError::LengthMismatch(width, r.len()));
    }
    let columns: Vec<Vec<f64>> = (0..width)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut retained: Vec<usize> = Vec::new();
    for j in 0..width {
        let mut redundant = false;
        for &k in &retained {
            if pearson(&columns[k], &columns[j])?.abs() >= threshold {
                redundant = true;
                break;
            }
        }
        if !redundant {
            retained.push(j);
        }
    }
    Ok(retained)
}

pub fn prune_redundant(matrix: &[FeatureVector], threshold: f64) -> Result<Vec<usize>, FeatureError> {
    let rows: Vec<Vec<f64>> = matrix.iter().map(|v| v.values.clone()).collect();
    prune_columns(&rows, threshold)
}

/// CSV with a `log_id` column followed by one column per catalog feature.
pub fn write_csv<W: Write>(vectors: &[FeatureVector], out: W) -> Result<(), FeatureError> {
    let csv_err = |e: csv::Error| FeatureError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["log_id"];
    header.extend(feature_names());
    w.write_record(&header).map_err(csv_err)?;
    for v in vectors {
        let mut rec = vec![v.log_id.clone()];
        rec.extend(v.values.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FeatureError::Csv(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>, FeatureError> {
    let csv_err = |e: csv::Error| FeatureError::Csv(e.to_string());
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let expected: Vec<&str> = std::iter::once("log_id").chain(feature_names()).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(FeatureError::Csv("header does not match the feature catalog".into()));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            let values = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|e| FeatureError::Csv(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FeatureVector {
                log_id: rec[0].to_owned(),
                values,
            })
        })
        .collect()
}
