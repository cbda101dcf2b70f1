//! Alpha and Alpha+ miners.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::event_log::{dfg, DirectlyFollowsGraph, EventLog, FootprintMatrix, Relation};
use crate::petri_net::PetriNet;

/// Upper bound on candidate `(A, B)` pairs explored during maximal-pair
/// enumeration.
const MAX_CANDIDATE_PAIRS: usize = 200_000;

type Pair = (BTreeSet<usize>, BTreeSet<usize>);

/// Maximal `(A, B)` pairs: every `a ∈ A` causally precedes every `b ∈ B`,
/// and `A`, `B` are each internally in the choice relation.
pub(crate) fn maximal_pairs(fp: &FootprintMatrix) -> Vec<Pair> {
    let n = fp.len();
    let choice = |i: usize, j: usize| fp.at(i, j) == Relation::Choice;
    let causal = |i: usize, j: usize| fp.at(i, j) == Relation::Sequence;

    let mut seen: BTreeSet<Pair> = BTreeSet::new();
    let mut queue: VecDeque<Pair> = VecDeque::new();
    for a in 0..n {
        for b in 0..n {
            if causal(a, b) && choice(a, a) && choice(b, b) {
                let p = (BTreeSet::from([a]), BTreeSet::from([b]));
                if seen.insert(p.clone()) {
                    queue.push_back(p);
                }
            }
        }
    }

    while let Some((aset, bset)) = queue.pop_front() {
        if seen.len() >= MAX_CANDIDATE_PAIRS {
            break;
        }
        for x in 0..n {
            if !choice(x, x) {
                continue;
            }
            if !aset.contains(&x)
                && aset.iter().all(|&a| choice(a, x))
                && bset.iter().all(|&b| causal(x, b))
            {
                let mut grown = aset.clone();
                grown.insert(x);
                let p = (grown, bset.clone());
                if seen.insert(p.clone()) {
                    queue.push_back(p);
                }
            }
            if !bset.contains(&x)
                && bset.iter().all(|&b| choice(b, x))
                && aset.iter().all(|&a| causal(a, x))
            {
                let mut grown = bset.clone();
                grown.insert(x);
                let p = (aset.clone(), grown);
                if seen.insert(p.clone()) {
                    queue.push_back(p);
                }
            }
        }
    }

    let all: Vec<Pair> = seen.into_iter().collect();
    all.iter()
        .filter(|(a, b)| {
            !all.iter().any(|(a2, b2)| {
                (a2.len() + b2.len() > a.len() + b.len()) && a.is_subset(a2) && b.is_subset(b2)
            })
        })
        .cloned()
        .collect()
}

/// Builds the alpha net from a directly-follows graph: one transition per
/// activity, one place per maximal pair, plus source and sink places wired
/// to the start and end activities.
pub(crate) fn alpha_from_dfg(g: &DirectlyFollowsGraph) -> (PetriNet, Vec<Pair>, Vec<String>) {
    let fp = FootprintMatrix::from_dfg(g);
    let activities: Vec<String> = fp.activities().to_vec();
    let pairs = maximal_pairs(&fp);

    let mut net = PetriNet::new();
    let source = net.add_place("source");
    let sink = net.add_place("sink");
    let transitions: Vec<usize> = activities
        .iter()
        .map(|a| net.add_transition(format!("t_{a}"), Some(a.clone())))
        .collect();
    for (i, (aset, bset)) in pairs.iter().enumerate() {
        let p = net.add_place(format!("p{}", i + 1));
        for &a in aset {
            net.add_output_arc(transitions[a], p);
        }
        for &b in bset {
            net.add_input_arc(p, transitions[b]);
        }
    }
    for (i, a) in activities.iter().enumerate() {
        if g.start_activities.contains_key(a) {
            net.add_input_arc(source, transitions[i]);
        }
        if g.end_activities.contains_key(a) {
            net.add_output_arc(transitions[i], sink);
        }
    }
    net.set_initial(source, 1);
    net.set_final(sink, 1);
    (net, pairs, activities)
}

/// Classic alpha algorithm. Logs with short loops are mined as-is; the
/// result may be unsound but always contains the source/sink skeleton.
pub fn alpha_steps(log: &EventLog) -> PetriNet {
    alpha_from_dfg(&dfg(log)).0
}

/// Alpha+ : length-one-loop activities are removed from the log, the rest is
/// mined with alpha, and each removed activity is re-attached as a self-loop
/// on the places that sit between its predecessors and successors.
pub fn alpha_plus(log: &EventLog) -> PetriNet {
    let full = dfg(log);
    let loops: BTreeSet<String> = full
        .edges
        .keys()
        .filter(|(a, b)| a == b)
        .map(|(a, _)| a.clone())
        .collect();
    if loops.is_empty() {
        return alpha_from_dfg(&full).0;
    }

    // DFG of the log with loop activities projected out.
    let mut reduced = DirectlyFollowsGraph::default();
    for t in log.traces() {
        let kept: Vec<&str> = t.activities().filter(|a| !loops.contains(*a)).collect();
        for a in &kept {
            reduced.nodes.insert((*a).to_owned());
        }
        if let (Some(f), Some(l)) = (kept.first(), kept.last()) {
            *reduced.start_activities.entry((*f).to_owned()).or_default() += 1;
            *reduced.end_activities.entry((*l).to_owned()).or_default() += 1;
        }
        for w in kept.windows(2) {
            *reduced.edges.entry((w[0].to_owned(), w[1].to_owned())).or_default() += 1;
        }
    }

    if reduced.nodes.is_empty() {
        return alpha_from_dfg(&full).0;
    }
    let (mut net, pairs, activities) = alpha_from_dfg(&reduced);
    let source = net.place_index("source").expect("source place");

    // Non-loop predecessors and successors of each loop activity.
    let mut preds: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut succs: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (a, b) in full.edges.keys() {
        if a != b {
            if loops.contains(b) {
                preds.entry(b.as_str()).or_default().insert(a.as_str());
            }
            if loops.contains(a) {
                succs.entry(a.as_str()).or_default().insert(b.as_str());
            }
        }
    }

    let mut start: Option<usize> = None;
    for l in &loops {
        let t = net.add_transition(format!("t_{l}"), Some(l.clone()));
        let empty = BTreeSet::new();
        let p_of = preds.get(l.as_str()).unwrap_or(&empty);
        let s_of = succs.get(l.as_str()).unwrap_or(&empty);
        let mut strict = Vec::new();
        let mut loose = Vec::new();
        for (i, (aset, bset)) in pairs.iter().enumerate() {
            let place = net.place_index(&format!("p{}", i + 1)).expect("pair place");
            let before = aset.iter().any(|&a| p_of.contains(activities[a].as_str()));
            let after = bset.iter().any(|&b| s_of.contains(activities[b].as_str()));
            if before && after {
                strict.push(place);
            } else if before {
                loose.push(place);
            }
        }
        let starts_trace = full.start_activities.contains_key(l);
        if starts_trace {
            let leads_to_start = s_of.iter().any(|s| reduced.start_activities.contains_key(*s));
            if leads_to_start || strict.is_empty() {
                strict.push(source);
            }
        }
        let attach = if strict.is_empty() { loose } else { strict };
        let attach = if attach.is_empty() { vec![source] } else { attach };
        for p in attach {
            // A self-loop on the source would give it an input arc; loops at
            // the start sit on a place behind a silent start transition.
            let p = if p == source { *start.get_or_insert_with(|| open_start(&mut net, source)) } else { p };
            net.add_input_arc(p, t);
            net.add_output_arc(t, p);
        }
    }
    net
}

fn open_start(net: &mut PetriNet, source: usize) -> usize {
    let start = net.add_place("start");
    net.move_consumers(source, start);
    let tau = net.add_transition("tau_start", None);
    net.add_input_arc(source, tau);
    net.add_output_arc(tau, start);
    start
}
