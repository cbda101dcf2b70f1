//! Inductive miner family: classic, infrequent (noise filtering) and
//! directly-follows based variants. All produce a [`ProcessTree`].

use std::collections::{BTreeMap, BTreeSet};

use super::tree::{Operator, ProcessTree};
use crate::event_log::EventLog;

pub const DEFAULT_NOISE_THRESHOLD: f64 = 0.2;

type Variant = Vec<usize>;
type SubLog = BTreeMap<Variant, usize>;

#[derive(Debug, Clone, Default)]
struct Dfg {
    acts: BTreeSet<usize>,
    edges: BTreeMap<(usize, usize), usize>,
    starts: BTreeMap<usize, usize>,
    ends: BTreeMap<usize, usize>,
    empty: usize,
}

impl Dfg {
    fn of(log: &SubLog) -> Dfg {
        let mut d = Dfg::default();
        for (v, &c) in log {
            if v.is_empty() {
                d.empty += c;
                continue;
            }
            d.acts.extend(v.iter().copied());
            *d.starts.entry(v[0]).or_default() += c;
            *d.ends.entry(v[v.len() - 1]).or_default() += c;
            for w in v.windows(2) {
                *d.edges.entry((w[0], w[1])).or_default() += c;
            }
        }
        d
    }

    fn has(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&(a, b))
    }

    /// Removes edges below `noise` times the strongest outgoing edge of
    /// their source, and start/end activities below `noise` times the
    /// strongest one.
    fn filtered(&self, noise: f64) -> Dfg {
        let mut max_out: BTreeMap<usize, usize> = BTreeMap::new();
        for (&(a, _), &c) in &self.edges {
            let m = max_out.entry(a).or_default();
            *m = (*m).max(c);
        }
        let keep_max = |m: &BTreeMap<usize, usize>| {
            let top = m.values().copied().max().unwrap_or(0) as f64;
            m.iter()
                .filter(|(_, &c)| c as f64 >= noise * top)
                .map(|(&k, &c)| (k, c))
                .collect::<BTreeMap<_, _>>()
        };
        Dfg {
            acts: self.acts.clone(),
            edges: self
                .edges
                .iter()
                .filter(|(&(a, _), &c)| c as f64 >= noise * max_out[&a] as f64)
                .map(|(&k, &c)| (k, c))
                .collect(),
            starts: keep_max(&self.starts),
            ends: keep_max(&self.ends),
            empty: self.empty,
        }
    }

    /// Restriction to `part`. Edges crossing into the part make their
    /// targets start activities, edges leaving it make their sources end
    /// activities.
    fn restrict(&self, part: &[usize], empty: usize) -> Dfg {
        let inside: BTreeSet<usize> = part.iter().copied().collect();
        let mut d = Dfg {
            acts: inside.clone(),
            empty,
            ..Dfg::default()
        };
        for (&s, &c) in &self.starts {
            if inside.contains(&s) {
                *d.starts.entry(s).or_default() += c;
            }
        }
        for (&e, &c) in &self.ends {
            if inside.contains(&e) {
                *d.ends.entry(e).or_default() += c;
            }
        }
        for (&(a, b), &c) in &self.edges {
            match (inside.contains(&a), inside.contains(&b)) {
                (true, true) => {
                    d.edges.insert((a, b), c);
                }
                (false, true) => *d.starts.entry(b).or_default() += c,
                (true, false) => *d.ends.entry(a).or_default() += c,
                (false, false) => {}
            }
        }
        if d.starts.is_empty() {
            d.starts = inside.iter().map(|&a| (a, 1)).collect();
        }
        if d.ends.is_empty() {
            d.ends = inside.iter().map(|&a| (a, 1)).collect();
        }
        d
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups of `acts` (by position) under the union-find; each group sorted,
/// groups ordered by their smallest member.
fn groups(acts: &[usize], uf: &mut UnionFind) -> Vec<Vec<usize>> {
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &a) in acts.iter().enumerate() {
        by_root.entry(uf.find(i)).or_default().push(a);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

fn components(acts: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(acts.len());
    for i in 0..acts.len() {
        for j in i + 1..acts.len() {
            if linked(acts[i], acts[j]) {
                uf.union(i, j);
            }
        }
    }
    groups(acts, &mut uf)
}

fn xor_cut(d: &Dfg) -> Option<Vec<Vec<usize>>> {
    let acts: Vec<usize> = d.acts.iter().copied().collect();
    let parts = components(&acts, |a, b| d.has(a, b) || d.has(b, a));
    (parts.len() > 1).then_some(parts)
}

fn reachability(d: &Dfg) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut succ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in d.edges.keys() {
        succ.entry(a).or_default().push(b);
    }
    d.acts
        .iter()
        .map(|&a| {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<usize> = succ.get(&a).cloned().unwrap_or_default();
            while let Some(x) = stack.pop() {
                if seen.insert(x) {
                    if let Some(next) = succ.get(&x) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            (a, seen)
        })
        .collect()
}

fn seq_cut(d: &Dfg) -> Option<Vec<Vec<usize>>> {
    let acts: Vec<usize> = d.acts.iter().copied().collect();
    let reach = reachability(d);
    let r = |a: usize, b: usize| reach[&a].contains(&b);
    let mut uf = UnionFind::new(acts.len());
    for i in 0..acts.len() {
        for j in i + 1..acts.len() {
            if r(acts[i], acts[j]) == r(acts[j], acts[i]) {
                uf.union(i, j);
            }
        }
    }
    let pos: BTreeMap<usize, usize> = acts.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    // Merge group pairs that are not uniformly ordered until all are.
    let parts = loop {
        let parts = groups(&acts, &mut uf);
        let mut conflict = None;
        'scan: for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let fwd = parts[i].iter().all(|&a| parts[j].iter().all(|&b| r(a, b) && !r(b, a)));
                let bwd = parts[i].iter().all(|&a| parts[j].iter().all(|&b| r(b, a) && !r(a, b)));
                if !fwd && !bwd {
                    conflict = Some((parts[i][0], parts[j][0]));
                    break 'scan;
                }
            }
        }
        match conflict {
            Some((a, b)) => uf.union(pos[&a], pos[&b]),
            None => break parts,
        }
    };
    if parts.len() < 2 {
        return None;
    }
    let mut ordered = parts;
    // A group precedes every group its members reach.
    ordered.sort_by_key(|g| std::cmp::Reverse(reach[&g[0]].iter().filter(|x| !g.contains(x)).count()));
    Some(ordered)
}

fn par_cut(d: &Dfg) -> Option<Vec<Vec<usize>>> {
    let acts: Vec<usize> = d.acts.iter().copied().collect();
    let comps = components(&acts, |a, b| !(d.has(a, b) && d.has(b, a)));
    if comps.len() < 2 {
        return None;
    }
    let complete = |g: &Vec<usize>| {
        g.iter().any(|a| d.starts.contains_key(a)) && g.iter().any(|a| d.ends.contains_key(a))
    };
    let mut parts: Vec<Vec<usize>> = comps.iter().filter(|g| complete(g)).cloned().collect();
    if parts.is_empty() {
        return None;
    }
    for g in comps.iter().filter(|g| !complete(g)) {
        parts[0].extend(g.iter().copied());
    }
    parts[0].sort_unstable();
    (parts.len() > 1).then_some(parts)
}

fn loop_cut(d: &Dfg) -> Option<Vec<Vec<usize>>> {
    let mut body: BTreeSet<usize> = d.starts.keys().chain(d.ends.keys()).copied().collect();
    let rest: Vec<usize> = d.acts.iter().copied().filter(|a| !body.contains(a)).collect();
    if body.is_empty() || rest.is_empty() {
        return None;
    }
    let mut redo = components(&rest, |a, b| d.has(a, b) || d.has(b, a));
    loop {
        let bad = redo.iter().position(|c| {
            let inside = |x: &usize| c.contains(x);
            d.edges.keys().any(|&(a, b)| {
                (body.contains(&a) && !d.ends.contains_key(&a) && inside(&b))
                    || (inside(&a) && body.contains(&b) && !d.starts.contains_key(&b))
            }) || c.iter().any(|&x| {
                let from_end = d.ends.keys().filter(|&&e| d.has(e, x)).count();
                let to_start = d.starts.keys().filter(|&&s| d.has(x, s)).count();
                (from_end > 0 && from_end < d.ends.len()) || (to_start > 0 && to_start < d.starts.len())
            })
        });
        match bad {
            Some(i) => body.extend(redo.remove(i)),
            None => break,
        }
    }
    if redo.is_empty() {
        return None;
    }
    let mut parts = vec![body.into_iter().collect::<Vec<_>>()];
    parts.extend(redo);
    Some(parts)
}

fn find_cut(d: &Dfg) -> Option<(Operator, Vec<Vec<usize>>)> {
    if let Some(p) = xor_cut(d) {
        return Some((Operator::ExclusiveChoice, p));
    }
    if let Some(p) = seq_cut(d) {
        return Some((Operator::Sequence, p));
    }
    if let Some(p) = par_cut(d) {
        return Some((Operator::Parallel, p));
    }
    loop_cut(d).map(|p| (Operator::Loop, p))
}

fn flower(acts: &BTreeSet<usize>, alphabet: &[String]) -> ProcessTree {
    ProcessTree::flower(acts.iter().map(|&a| alphabet[a].clone()))
}

fn single(a: usize, repeats: bool, alphabet: &[String]) -> ProcessTree {
    let leaf = ProcessTree::activity(alphabet[a].clone());
    if repeats {
        ProcessTree::looped(leaf, ProcessTree::Silent)
    } else {
        leaf
    }
}

fn assemble(op: Operator, mut children: Vec<ProcessTree>) -> ProcessTree {
    match op {
        Operator::Loop => {
            let body = children.remove(0);
            let redo = match children.len() {
                0 => return body,
                1 => children.pop().expect("one redo"),
                _ => ProcessTree::xor(children),
            };
            ProcessTree::looped(body, redo)
        }
        _ if children.len() == 1 => children.pop().expect("one child"),
        _ => ProcessTree::Operator(op, children),
    }
}

fn project(v: &[usize], part: &BTreeSet<usize>) -> Variant {
    v.iter().copied().filter(|a| part.contains(a)).collect()
}

fn best_part(v: &[usize], parts: &[BTreeSet<usize>]) -> usize {
    let mut best = 0;
    let mut best_n = 0;
    for (i, p) in parts.iter().enumerate() {
        let n = v.iter().filter(|a| p.contains(a)).count();
        if n > best_n {
            best = i;
            best_n = n;
        }
    }
    best
}

/// Splits the log along a cut. The splits tolerate traces that do not
/// respect the cut (possible after noise filtering); on an exact cut they
/// reduce to the plain projections.
fn split(log: &SubLog, op: Operator, parts: &[Vec<usize>]) -> Vec<SubLog> {
    let sets: Vec<BTreeSet<usize>> = parts.iter().map(|p| p.iter().copied().collect()).collect();
    let mut out: Vec<SubLog> = vec![SubLog::new(); parts.len()];
    for (v, &c) in log {
        match op {
            Operator::ExclusiveChoice => {
                let i = best_part(v, &sets);
                *out[i].entry(project(v, &sets[i])).or_default() += c;
            }
            Operator::Sequence | Operator::Parallel => {
                for (i, s) in sets.iter().enumerate() {
                    *out[i].entry(project(v, s)).or_default() += c;
                }
            }
            Operator::Loop => {
                let mut runs: Vec<(bool, Variant)> = Vec::new();
                for &a in v {
                    let is_body = sets[0].contains(&a);
                    match runs.last_mut() {
                        Some((b, run)) if *b == is_body => run.push(a),
                        _ => runs.push((is_body, vec![a])),
                    }
                }
                if runs.first().is_some_and(|(b, _)| !b) {
                    *out[0].entry(Vec::new()).or_default() += c;
                }
                if runs.last().is_some_and(|(b, _)| !b) {
                    *out[0].entry(Vec::new()).or_default() += c;
                }
                for (is_body, run) in runs {
                    if is_body {
                        *out[0].entry(run).or_default() += c;
                    } else {
                        let i = 1 + best_part(&run, &sets[1..]);
                        *out[i].entry(project(&run, &sets[i])).or_default() += c;
                    }
                }
            }
        }
    }
    out
}

fn mine_log(mut log: SubLog, noise: f64, alphabet: &[String]) -> ProcessTree {
    let total: usize = log.values().sum();
    let empty = log.get(&Vec::new()).copied().unwrap_or(0);
    if total == 0 || empty == total {
        return ProcessTree::Silent;
    }
    if empty > 0 {
        log.remove(&Vec::new());
        if (empty as f64) / (total as f64) >= noise {
            return ProcessTree::xor(vec![ProcessTree::Silent, mine_log(log, noise, alphabet)]);
        }
    }
    let d = Dfg::of(&log);
    if d.acts.len() == 1 {
        let a = *d.acts.iter().next().expect("one activity");
        return single(a, log.keys().any(|v| v.len() > 1), alphabet);
    }
    let cut = find_cut(&d).or_else(|| if noise > 0.0 { find_cut(&d.filtered(noise)) } else { None });
    match cut {
        Some((op, parts)) => {
            let subs = split(&log, op, &parts);
            let children: Vec<ProcessTree> = subs
                .into_iter()
                .enumerate()
                .filter(|(i, s)| !s.is_empty() || (*i == 0 && op == Operator::Loop))
                .map(|(_, s)| mine_log(s, noise, alphabet))
                .collect();
            assemble(op, children)
        }
        None => flower(&d.acts, alphabet),
    }
}

fn mine_dfg(d: Dfg, alphabet: &[String]) -> ProcessTree {
    if d.acts.is_empty() {
        return ProcessTree::Silent;
    }
    if d.empty > 0 {
        let rest = Dfg { empty: 0, ..d };
        return ProcessTree::xor(vec![ProcessTree::Silent, mine_dfg(rest, alphabet)]);
    }
    if d.acts.len() == 1 {
        let a = *d.acts.iter().next().expect("one activity");
        return single(a, d.has(a, a), alphabet);
    }
    let Some((op, parts)) = find_cut(&d) else {
        return flower(&d.acts, alphabet);
    };
    let group: BTreeMap<usize, usize> = parts
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.iter().map(move |&a| (a, i)))
        .collect();
    let children = parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let skippable = op == Operator::Sequence
                && (d.edges.keys().any(|(a, b)| group[a] < i && group[b] > i)
                    || d.starts.keys().any(|s| group[s] > i)
                    || d.ends.keys().any(|e| group[e] < i));
            mine_dfg(d.restrict(p, usize::from(skippable)), alphabet)
        })
        .collect();
    assemble(op, children)
}

fn encode(log: &EventLog) -> (Vec<String>, SubLog) {
    let alphabet = log.activities();
    let index: BTreeMap<&str, usize> = alphabet.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut sub = SubLog::new();
    for t in log.traces() {
        *sub.entry(t.activities().map(|a| index[a]).collect()).or_default() += 1;
    }
    (alphabet, sub)
}

/// Classic inductive miner; the tree reproduces every trace of the log.
pub fn inductive_tree(log: &EventLog) -> ProcessTree {
    let (alphabet, sub) = encode(log);
    mine_log(sub, 0.0, &alphabet)
}

/// Infrequent variant: when no cut exists on the full directly-follows
/// graph, infrequent edges and start/end activities are filtered and the
/// cut search is retried. Rare empty traces are dropped.
pub fn inductive_infrequent_tree(log: &EventLog, noise_threshold: f64) -> ProcessTree {
    let (alphabet, sub) = encode(log);
    mine_log(sub, noise_threshold, &alphabet)
}

/// Directly-follows variant: cuts are found and applied on the graph
/// alone; the log is never split.
pub fn inductive_direct_tree(log: &EventLog) -> ProcessTree {
    let (alphabet, sub) = encode(log);
    mine_dfg(Dfg::of(&sub), &alphabet)
}
