use std::fmt;

use serde::{Deserialize, Serialize};

use crate::petri_net::PetriNet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Sequence,
    ExclusiveChoice,
    Parallel,
    /// Exactly two children: the do-part and the redo-part.
    Loop,
}

/// Block-structured process model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessTree {
    Activity(String),
    Silent,
    Operator(Operator, Vec<ProcessTree>),
}

impl ProcessTree {
    pub fn activity(label: impl Into<String>) -> Self {
        ProcessTree::Activity(label.into())
    }

    pub fn seq(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Operator(Operator::Sequence, children)
    }

    pub fn xor(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Operator(Operator::ExclusiveChoice, children)
    }

    pub fn par(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Operator(Operator::Parallel, children)
    }

    pub fn looped(body: ProcessTree, redo: ProcessTree) -> Self {
        ProcessTree::Operator(Operator::Loop, vec![body, redo])
    }

    /// Flower model: any sequence over `labels`, including the empty one.
    pub fn flower(labels: impl IntoIterator<Item = String>) -> Self {
        let mut leaves: Vec<ProcessTree> = labels.into_iter().map(ProcessTree::Activity).collect();
        let redo = match leaves.len() {
            0 => return ProcessTree::Silent,
            1 => leaves.pop().expect("one leaf"),
            _ => ProcessTree::xor(leaves),
        };
        ProcessTree::looped(ProcessTree::Silent, redo)
    }

    /// Checks operator arities.
    pub fn is_valid(&self) -> bool {
        match self {
            ProcessTree::Activity(l) => !l.is_empty(),
            ProcessTree::Silent => true,
            ProcessTree::Operator(Operator::Loop, c) => c.len() == 2 && c.iter().all(Self::is_valid),
            ProcessTree::Operator(_, c) => c.len() >= 2 && c.iter().all(Self::is_valid),
        }
    }

    /// Nesting depth; leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            ProcessTree::Operator(_, c) => 1 + c.iter().map(Self::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Activity labels in left-to-right leaf order.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ProcessTree::Activity(l) => out.push(l),
            ProcessTree::Silent => {}
            ProcessTree::Operator(_, c) => c.iter().for_each(|ch| ch.collect_labels(out)),
        }
    }

    pub fn contains_operator(&self, op: Operator) -> bool {
        match self {
            ProcessTree::Operator(o, c) => *o == op || c.iter().any(|ch| ch.contains_operator(op)),
            _ => false,
        }
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTree::Activity(l) => write!(f, "{l}"),
            ProcessTree::Silent => write!(f, "τ"),
            ProcessTree::Operator(op, children) => {
                let sym = match op {
                    Operator::Sequence => "→",
                    Operator::ExclusiveChoice => "×",
                    Operator::Parallel => "∧",
                    Operator::Loop => "↺",
                };
                write!(f, "{sym}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Builder {
    net: PetriNet,
    places: usize,
    transitions: usize,
}

impl Builder {
    fn place(&mut self) -> usize {
        self.places += 1;
        self.net.add_place(format!("p{}", self.places))
    }

    fn transition(&mut self, label: Option<&str>) -> usize {
        self.transitions += 1;
        let id = match label {
            Some(_) => format!("t{}", self.transitions),
            None => format!("tau{}", self.transitions),
        };
        self.net.add_transition(id, label.map(str::to_owned))
    }

    fn silent_between(&mut self, inputs: &[usize], outputs: &[usize]) {
        let t = self.transition(None);
        for &p in inputs {
            self.net.add_input_arc(p, t);
        }
        for &p in outputs {
            self.net.add_output_arc(t, p);
        }
    }

    fn translate(&mut self, node: &ProcessTree, entry: usize, exit: usize) {
        match node {
            ProcessTree::Activity(l) => {
                let t = self.transition(Some(l));
                self.net.add_input_arc(entry, t);
                self.net.add_output_arc(t, exit);
            }
            ProcessTree::Silent => self.silent_between(&[entry], &[exit]),
            ProcessTree::Operator(Operator::Sequence, children) => {
                let mut current = entry;
                for (i, child) in children.iter().enumerate() {
                    let next = if i + 1 == children.len() { exit } else { self.place() };
                    self.translate(child, current, next);
                    current = next;
                }
            }
            ProcessTree::Operator(Operator::ExclusiveChoice, children) => {
                for child in children {
                    self.translate(child, entry, exit);
                }
            }
            ProcessTree::Operator(Operator::Parallel, children) => {
                let starts: Vec<usize> = children.iter().map(|_| self.place()).collect();
                let ends: Vec<usize> = children.iter().map(|_| self.place()).collect();
                self.silent_between(&[entry], &starts);
                for (i, child) in children.iter().enumerate() {
                    self.translate(child, starts[i], ends[i]);
                }
                self.silent_between(&ends, &[exit]);
            }
            ProcessTree::Operator(Operator::Loop, children) => {
                let head = self.place();
                let tail = self.place();
                self.silent_between(&[entry], &[head]);
                self.translate(&children[0], head, tail);
                self.translate(&children[1], tail, head);
                self.silent_between(&[tail], &[exit]);
            }
        }
    }
}

/// Compositional translation into a workflow net with places `source` and
/// `sink`. Sequences chain through fresh places, choices share their entry
/// and exit places, parallel blocks get silent split/join transitions and
/// loops get silent enter/exit transitions around a do/redo cycle.
pub fn tree_to_net(tree: &ProcessTree) -> PetriNet {
    let mut b = Builder {
        net: PetriNet::new(),
        places: 0,
        transitions: 0,
    };
    let source = b.net.add_place("source");
    let sink = b.net.add_place("sink");
    b.translate(tree, source, sink);
    b.net.set_initial(source, 1);
    b.net.set_final(sink, 1);
    b.net
}
