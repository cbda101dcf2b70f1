//! Heuristics miner: dependency graph from the DFG, converted into a net
//! where every activity has one input and one output place and each
//! dependency edge is a silent transition between them.

use std::collections::BTreeSet;

use crate::event_log::{DirectlyFollowsGraph, EventLog};
use crate::petri_net::PetriNet;

pub const DEFAULT_DEPENDENCY_THRESHOLD: f64 = 0.5;

/// Dependency measure between `a` and `b`; 0 when neither direction is
/// observed.
pub fn heuristics_dependency(dfg: &DirectlyFollowsGraph, a: &str, b: &str) -> f64 {
    if a == b {
        let aa = dfg.edge_count(a, a) as f64;
        return aa / (aa + 1.0);
    }
    let ab = dfg.edge_count(a, b) as f64;
    let ba = dfg.edge_count(b, a) as f64;
    (ab - ba) / (ab + ba + 1.0)
}

/// Edges of the dependency graph, including the best-neighbour edges added
/// so that every activity lies on a path from a start to an end activity.
pub(crate) fn dependency_edges(g: &DirectlyFollowsGraph, threshold: f64) -> BTreeSet<(String, String)> {
    let mut edges: BTreeSet<(String, String)> = g
        .edges
        .keys()
        .filter(|(a, b)| heuristics_dependency(g, a, b) >= threshold)
        .cloned()
        .collect();

    for n in &g.nodes {
        let has_in = edges.iter().any(|(a, b)| b == n && a != n);
        if !has_in && !g.start_activities.contains_key(n) {
            if let Some(best) = best_neighbour(g, n, true) {
                edges.insert((best, n.clone()));
            }
        }
        let has_out = edges.iter().any(|(a, b)| a == n && b != n);
        if !has_out && !g.end_activities.contains_key(n) {
            if let Some(best) = best_neighbour(g, n, false) {
                edges.insert((n.clone(), best));
            }
        }
    }
    edges
}

/// Highest-dependency observed predecessor (or successor) other than `n`
/// itself; ties go to the lexicographically smallest name.
fn best_neighbour(g: &DirectlyFollowsGraph, n: &str, predecessor: bool) -> Option<String> {
    let mut best: Option<(f64, &str)> = None;
    for (a, b) in g.edges.keys() {
        let (other, dep) = if predecessor && b == n && a != n {
            (a.as_str(), heuristics_dependency(g, a, b))
        } else if !predecessor && a == n && b != n {
            (b.as_str(), heuristics_dependency(g, a, b))
        } else {
            continue;
        };
        match best {
            Some((d, o)) if d > dep || (d == dep && o <= other) => {}
            _ => best = Some((dep, other)),
        }
    }
    best.map(|(_, o)| o.to_owned())
}

pub fn heuristics(log: &EventLog, dependency_threshold: f64) -> PetriNet {
    let g = crate::event_log::dfg(log);
    let edges = dependency_edges(&g, dependency_threshold);

    let mut net = PetriNet::new();
    let source = net.add_place("source");
    let sink = net.add_place("sink");
    let mut io = std::collections::BTreeMap::new();
    for a in &g.nodes {
        let pin = net.add_place(format!("in_{a}"));
        let pout = net.add_place(format!("out_{a}"));
        let t = net.add_transition(format!("t_{a}"), Some(a.clone()));
        net.add_input_arc(pin, t);
        net.add_output_arc(t, pout);
        io.insert(a.as_str(), (pin, pout));
    }
    for a in g.start_activities.keys() {
        let t = net.add_transition(format!("tau_start_{a}"), None);
        net.add_input_arc(source, t);
        net.add_output_arc(t, io[a.as_str()].0);
    }
    for (a, b) in &edges {
        let t = net.add_transition(format!("tau_{a}_{b}"), None);
        net.add_input_arc(io[a.as_str()].1, t);
        net.add_output_arc(t, io[b.as_str()].0);
    }
    for a in g.end_activities.keys() {
        let t = net.add_transition(format!("tau_end_{a}"), None);
        net.add_input_arc(io[a.as_str()].1, t);
        net.add_output_arc(t, sink);
    }
    net.set_initial(source, 1);
    net.set_final(sink, 1);
    net
}
