//! Regression trees grown depth-wise on second-order statistics.
//!
//! Split search is exact: for every candidate feature the rows are visited
//! once in presorted order and every boundary between distinct values is a
//! candidate. All nodes of one depth level are searched in the same pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Feature-major training matrix with per-feature presorted row orders.
pub struct Columns {
    pub values: Vec<Vec<f64>>,
    pub sorted: Vec<Vec<u32>>,
}

impl Columns {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        let sorted = values
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Columns { values, sorted }
    }

    pub fn nrows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|c| c[i]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub l2: f64,
    pub learning_rate: f64,
}

/// Best split found for a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub grad_left: f64,
    pub hess_left: f64,
    /// Unscaled (pre learning-rate) child weights after bound clipping.
    pub weight_left: f64,
    pub weight_right: f64,
}

#[derive(Debug, Clone, Copy)]
struct NodeStat {
    grad: f64,
    hess: f64,
    lo: f64,
    hi: f64,
}

impl NodeStat {
    fn weight(&self, l2: f64) -> f64 {
        leaf_weight(self.grad, self.hess, l2).clamp(self.lo, self.hi)
    }
}

pub fn leaf_weight(g: f64, h: f64, l2: f64) -> f64 {
    if h + l2 > 0.0 {
        -g / (h + l2)
    } else {
        0.0
    }
}

/// Structure score `G^2 / (H + l2)` of an unconstrained node.
pub fn structure_score(g: f64, h: f64, l2: f64) -> f64 {
    if h + l2 > 0.0 {
        g * g / (h + l2)
    } else {
        0.0
    }
}

/// Score of a node held at weight `w`: `-(2 G w + (H + l2) w^2)`; equals
/// [`structure_score`] at the unconstrained optimum.
fn score_at(g: f64, h: f64, l2: f64, w: f64) -> f64 {
    -(2.0 * g * w + (h + l2) * w * w)
}

struct SearchContext<'a> {
    cols: &'a Columns,
    grad: &'a [f64],
    hess: &'a [f64],
    params: GrowParams,
    /// Per-feature direction in {-1, 0, 1}.
    monotone: &'a [i8],
    constrained: bool,
}

impl SearchContext<'_> {
    fn evaluate(&self, node: &NodeStat, feature: usize, gl: f64, hl: f64) -> Option<(f64, f64, f64)> {
        let l2 = self.params.l2;
        let (gr, hr) = (node.grad - gl, node.hess - hl);
        let mcw = self.params.min_child_weight;
        if hl < mcw || hr < mcw || hl + l2 <= 0.0 || hr + l2 <= 0.0 {
            return None;
        }
        if !self.constrained {
            let gain = 0.5 * (structure_score(gl, hl, l2) + structure_score(gr, hr, l2) - structure_score(node.grad, node.hess, l2));
            return Some((gain, leaf_weight(gl, hl, l2), leaf_weight(gr, hr, l2)));
        }
        let wl = leaf_weight(gl, hl, l2).clamp(node.lo, node.hi);
        let wr = leaf_weight(gr, hr, l2).clamp(node.lo, node.hi);
        match self.monotone[feature] {
            1 if wl > wr => return None,
            -1 if wl < wr => return None,
            _ => {}
        }
        let parent = score_at(node.grad, node.hess, l2, node.weight(l2));
        let gain = 0.5 * (score_at(gl, hl, l2, wl) + score_at(gr, hr, l2, wr) - parent);
        Some((gain, wl, wr))
    }

    /// Best split per active node for one feature.
    fn scan_feature(&self, feature: usize, slot_of_row: &[u32], nodes: &[NodeStat]) -> Vec<Option<SplitCandidate>> {
        let m = nodes.len();
        let mut gl = vec![0.0; m];
        let mut hl = vec![0.0; m];
        let mut last = vec![f64::NAN; m];
        let mut best: Vec<Option<SplitCandidate>> = vec![None; m];
        let col = &self.cols.values[feature];
        for &r in &self.cols.sorted[feature] {
            let r = r as usize;
            let slot = slot_of_row[r];
            if slot == u32::MAX {
                continue;
            }
            let s = slot as usize;
            let v = col[r];
            if !last[s].is_nan() && v > last[s] {
                if let Some((gain, wl, wr)) = self.evaluate(&nodes[s], feature, gl[s], hl[s]) {
                    if best[s].is_none_or(|b| gain > b.gain) {
                        let mut threshold = last[s] + (v - last[s]) / 2.0;
                        if threshold <= last[s] {
                            threshold = v;
                        }
                        best[s] = Some(SplitCandidate {
                            feature,
                            threshold,
                            gain,
                            grad_left: gl[s],
                            hess_left: hl[s],
                            weight_left: wl,
                            weight_right: wr,
                        });
                    }
                }
            }
            gl[s] += self.grad[r];
            hl[s] += self.hess[r];
            last[s] = v;
        }
        best
    }

    fn search(&self, features: &[usize], slot_of_row: &[u32], nodes: &[NodeStat]) -> Vec<Option<SplitCandidate>> {
        let per_feature: Vec<Vec<Option<SplitCandidate>>> = features
            .par_iter()
            .map(|&f| self.scan_feature(f, slot_of_row, nodes))
            .collect();
        let mut best: Vec<Option<SplitCandidate>> = vec![None; nodes.len()];
        // Ties go to the earlier feature.
        for cands in per_feature {
            for (b, c) in best.iter_mut().zip(cands) {
                if let Some(c) = c {
                    if b.is_none_or(|cur| c.gain > cur.gain) {
                        *b = Some(c);
                    }
                }
            }
        }
        best
    }
}

/// Best split of a single node holding every row with `in_node[i]` true.
pub fn best_split(
    cols: &Columns,
    grad: &[f64],
    hess: &[f64],
    in_node: &[bool],
    features: &[usize],
    params: GrowParams,
) -> Option<SplitCandidate> {
    let monotone = vec![0i8; cols.values.len()];
    let ctx = SearchContext {
        cols,
        grad,
        hess,
        params,
        monotone: &monotone,
        constrained: false,
    };
    let slots: Vec<u32> = in_node.iter().map(|&b| if b { 0 } else { u32::MAX }).collect();
    let (g, h) = (0..grad.len())
        .filter(|&i| in_node[i])
        .fold((0.0, 0.0), |(g, h), i| (g + grad[i], h + hess[i]));
    let node = NodeStat {
        grad: g,
        hess: h,
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    ctx.search(features, &slots, &[node]).pop().flatten().filter(|c| c.gain > 0.0)
}

/// Grow one tree on the rows with `active[i]` true. Leaf values are scaled
/// by the learning rate.
pub fn grow_tree(
    cols: &Columns,
    grad: &[f64],
    hess: &[f64],
    active: &[bool],
    features: &[usize],
    monotone: &[i8],
    params: GrowParams,
) -> Tree {
    let ctx = SearchContext {
        cols,
        grad,
        hess,
        params,
        monotone,
        constrained: monotone.iter().any(|&c| c != 0),
    };
    let n = cols.nrows();
    let l2 = params.l2;

    let (g0, h0) = (0..n)
        .filter(|&i| active[i])
        .fold((0.0, 0.0), |(g, h), i| (g + grad[i], h + hess[i]));
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
    // Tree node id of each node in the current level, with its stats.
    let mut level: Vec<(usize, NodeStat)> = vec![(
        0,
        NodeStat {
            grad: g0,
            hess: h0,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        },
    )];
    let mut slot_of_row: Vec<u32> = (0..n).map(|i| if active[i] { 0 } else { u32::MAX }).collect();

    for _depth in 0..params.max_depth {
        if level.is_empty() {
            break;
        }
        let stats: Vec<NodeStat> = level.iter().map(|(_, s)| *s).collect();
        let best = ctx.search(features, &slot_of_row, &stats);
        let mut next: Vec<(usize, NodeStat)> = Vec::new();
        // Slot in `next` for the left/right child of each current slot.
        let mut child_slots: Vec<Option<(u32, u32, usize, f64)>> = vec![None; level.len()];
        for (s, ((id, stat), cand)) in level.iter().zip(best).enumerate() {
            let Some(c) = cand.filter(|c| c.gain > 0.0) else {
                nodes[*id] = Node::Leaf {
                    value: params.learning_rate * stat.weight(l2),
                };
                continue;
            };
            let (left_id, right_id) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[*id] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left: left_id,
                right: right_id,
            };
            let mid = 0.5 * (c.weight_left + c.weight_right);
            let (lb, rb) = match monotone[c.feature] {
                1 => ((stat.lo, mid), (mid, stat.hi)),
                -1 => ((mid, stat.hi), (stat.lo, mid)),
                _ => ((stat.lo, stat.hi), (stat.lo, stat.hi)),
            };
            let left = NodeStat {
                grad: c.grad_left,
                hess: c.hess_left,
                lo: lb.0,
                hi: lb.1,
            };
            let right = NodeStat {
                grad: stat.grad - c.grad_left,
                hess: stat.hess - c.hess_left,
                lo: rb.0,
                hi: rb.1,
            };
            let ls = next.len() as u32;
            next.push((left_id, left));
            next.push((right_id, right));
            child_slots[s] = Some((ls, ls + 1, c.feature, c.threshold));
        }
        for i in 0..n {
            let s = slot_of_row[i];
            if s == u32::MAX {
                continue;
            }
            slot_of_row[i] = match child_slots[s as usize] {
                Some((l, r, f, t)) => {
                    if cols.values[f][i] < t {
                        l
                    } else {
                        r
                    }
                }
                None => u32::MAX,
            };
        }
        level = next;
    }
    // Nodes still open at max depth become leaves. Recompute their sums from
    // rows for exactness rather than trusting subtracted statistics.
    if !level.is_empty() {
        let mut sums = vec![(0.0, 0.0); level.len()];
        for i in 0..n {
            let s = slot_of_row[i];
            if s != u32::MAX {
                sums[s as usize].0 += grad[i];
                sums[s as usize].1 += hess[i];
            }
        }
        for ((id, stat), (g, h)) in level.iter().zip(sums) {
            let st = NodeStat {
                grad: g,
                hess: h,
                ..*stat
            };
            nodes[*id] = Node::Leaf {
                value: params.learning_rate * st.weight(l2),
            };
        }
    }
    Tree { nodes }
}
