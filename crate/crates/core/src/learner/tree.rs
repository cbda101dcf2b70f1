use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Splits with a gain below this are not made.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
        gain: f64,
    },
    Leaf {
        value: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

/// Binary regression tree stored as a node array with the root at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        let root = self.nodes[0].cover();
        if root == 0.0 {
            return 0.0;
        }
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { value, cover } => value * cover,
                Node::Split { .. } => 0.0,
            })
            .sum::<f64>()
            / root
    }

    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Every split node's cover equals the sum of its children's covers.
    pub fn covers_consistent(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            Node::Split { left, right, cover, .. } => {
                (self.nodes[*left].cover() + self.nodes[*right].cover() - cover).abs() < 1e-9
            }
            Node::Leaf { .. } => true,
        })
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best split of `rows` on one feature: candidate thresholds are midpoints
/// between consecutive distinct values, scanned in increasing order.
fn best_on_feature(x: &[Vec<f64>], target: &[f64], rows: &[usize], feature: usize, min_leaf: usize) -> Option<Split> {
    let mut order: Vec<(f64, f64)> = rows.iter().map(|&r| (x[r][feature], target[r])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = order.len();
    let total: f64 = order.iter().map(|p| p.1).sum();
    let parent = total * total / n as f64;
    let mut left_sum = 0.0;
    let mut best: Option<Split> = None;
    for i in 0..n - 1 {
        left_sum += order[i].1;
        let n_left = i + 1;
        if order[i].0 == order[i + 1].0 || n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let right_sum = total - left_sum;
        let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - parent;
        if best.is_none_or(|b| gain > b.gain) {
            let mid = 0.5 * (order[i].0 + order[i + 1].0);
            // Adjacent floats can round the midpoint down onto the lower value.
            let threshold = if mid > order[i].0 { mid } else { order[i + 1].0 };
            best = Some(Split { feature, threshold, gain });
        }
    }
    best
}

/// Best split over `features`; ties go to the lowest feature index, then
/// the lowest threshold.
fn best_split(x: &[Vec<f64>], target: &[f64], rows: &[usize], features: &[usize], min_leaf: usize) -> Option<Split> {
    let candidates: Vec<Option<Split>> = features
        .par_iter()
        .map(|&f| best_on_feature(x, target, rows, f, min_leaf))
        .collect();
    let mut best: Option<Split> = None;
    for s in candidates.into_iter().flatten() {
        let better = match best {
            None => true,
            Some(b) => s.gain > b.gain || (s.gain == b.gain && (s.feature, s.threshold) < (b.feature, b.threshold)),
        };
        if better {
            best = Some(s);
        }
    }
    best.filter(|s| s.gain >= MIN_SPLIT_GAIN)
}

pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

/// Grows a squared-error CART tree on `target` over `rows`.
pub(crate) fn grow(x: &[Vec<f64>], target: &[f64], rows: &[usize], features: &[usize], p: &GrowParams) -> RegressionTree {
    let mut tree = RegressionTree { nodes: Vec::new() };
    build(&mut tree, x, target, rows.to_vec(), features, p, 0);
    tree
}

fn build(
    tree: &mut RegressionTree,
    x: &[Vec<f64>],
    target: &[f64],
    rows: Vec<usize>,
    features: &[usize],
    p: &GrowParams,
    depth: usize,
) -> usize {
    let cover = rows.len() as f64;
    let mean = rows.iter().map(|&r| target[r]).sum::<f64>() / cover;
    let idx = tree.nodes.len();
    tree.nodes.push(Node::Leaf { value: mean, cover });
    if depth >= p.max_depth || rows.len() < 2 * p.min_samples_leaf {
        return idx;
    }
    let Some(s) = best_split(x, target, &rows, features, p.min_samples_leaf) else {
        return idx;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][s.feature] < s.threshold);
    let left = build(tree, x, target, l, features, p, depth + 1);
    let right = build(tree, x, target, r, features, p, depth + 1);
    tree.nodes[idx] = Node::Split {
        feature: s.feature,
        threshold: s.threshold,
        left,
        right,
        cover,
        gain: s.gain,
    };
    idx
}
