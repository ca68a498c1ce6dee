//! Vote-history tree shared by the public and partially public optimizers.
//!
//! Nodes are vote histories stored in heap order: the history with `d`
//! votes and bit pattern `b` (first vote most significant) sits at index
//! `2^d − 1 + b`, its 0-child at `2i + 1` and its 1-child at `2i + 2`.
//! Each non-terminal node belongs to an information set; all nodes of one
//! set share a threshold. Public voting gives every node its own set,
//! partial voting groups nodes by the votes the acting agent can see.

use crate::model::{threshold_gap, FusionRule, LikelihoodModel, VoteProbs};
use crate::solver::{coordinate_minimizer, SolverOptions};

pub(crate) const MAX_AGENTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SweepOrder {
    /// Deepest information sets first, then re-sweep.
    Backward,
    /// Acting order, then re-sweep.
    Forward,
}

pub(crate) fn depth_of(idx: usize) -> usize {
    (usize::BITS - 1 - (idx + 1).leading_zeros()) as usize
}

pub(crate) fn bits_of(idx: usize) -> u32 {
    (idx + 1 - (1 << depth_of(idx))) as u32
}

pub(crate) struct Tree {
    pub n: usize,
    /// Team decision at terminal nodes.
    pub decision: Vec<Option<u8>>,
    /// Live nodes (no terminal strict ancestor), ascending index.
    pub live: Vec<usize>,
    pub info_of: Vec<Option<usize>>,
    pub info_depth: Vec<usize>,
    pub info_nodes: Vec<Vec<usize>>,
}

impl Tree {
    /// `key(depth, bits)` names the information set of a live non-terminal
    /// node. `info_depth` lists the acting depth of every set, including
    /// sets that no live node reaches.
    pub fn new(
        rule: FusionRule,
        info_depth: Vec<usize>,
        key: impl Fn(usize, u32) -> usize,
    ) -> Self {
        let n = rule.n();
        let size = (1usize << (n + 1)) - 1;
        let mut decision = vec![None; size];
        let mut alive = vec![false; size];
        let mut info_of = vec![None; size];
        let mut info_nodes = vec![Vec::new(); info_depth.len()];
        let mut live = Vec::new();
        alive[0] = true;
        for idx in 0..size {
            if !alive[idx] {
                continue;
            }
            live.push(idx);
            let d = depth_of(idx);
            let bits = bits_of(idx);
            let need = rule.l() as i64 - bits.count_ones() as i64;
            let remaining = (n - d) as i64;
            if need <= 0 {
                decision[idx] = Some(1);
            } else if need > remaining {
                decision[idx] = Some(0);
            } else {
                let k = key(d, bits);
                info_of[idx] = Some(k);
                info_nodes[k].push(idx);
                alive[2 * idx + 1] = true;
                alive[2 * idx + 2] = true;
            }
        }
        Self {
            n,
            decision,
            live,
            info_of,
            info_depth,
            info_nodes,
        }
    }

    pub fn size(&self) -> usize {
        self.decision.len()
    }
}

/// Reach probabilities and conditional error probabilities for the current
/// thresholds.
pub(crate) struct TreeState {
    pub thresholds: Vec<f64>,
    probs: Vec<VoteProbs>,
    /// `P{reach node | H = h}`.
    reach: [Vec<f64>; 2],
    /// `wrong[h][v]`: P{team decides 1 − h | H = h, at v}; `right` is its
    /// complement, kept separately to avoid cancellation.
    wrong: [Vec<f64>; 2],
    right: [Vec<f64>; 2],
}

pub(crate) struct Descent {
    pub thresholds: Vec<f64>,
    pub risk: f64,
    pub type_i: f64,
    pub type_ii: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub worst_info: usize,
}

impl TreeState {
    pub fn new(tree: &Tree, models: &[LikelihoodModel], thresholds: Vec<f64>) -> Self {
        let probs = thresholds
            .iter()
            .zip(&tree.info_depth)
            .map(|(&t, &d)| models[d].vote_probs(t))
            .collect();
        let size = tree.size();
        let zeros = || [vec![0.0; size], vec![0.0; size]];
        Self {
            thresholds,
            probs,
            reach: zeros(),
            wrong: zeros(),
            right: zeros(),
        }
    }

    pub fn update_reach(&mut self, tree: &Tree) {
        self.reach[0][0] = 1.0;
        self.reach[1][0] = 1.0;
        for &v in &tree.live {
            let Some(k) = tree.info_of[v] else { continue };
            let p = self.probs[k].given;
            for h in 0..2 {
                let r = self.reach[h][v];
                self.reach[h][2 * v + 1] = r * p[h][0];
                self.reach[h][2 * v + 2] = r * p[h][1];
            }
        }
    }

    pub fn update_costs(&mut self, tree: &Tree) {
        for &v in tree.live.iter().rev() {
            match (tree.decision[v], tree.info_of[v]) {
                (Some(dec), _) => {
                    // H = 0 errs on a 1-decision, H = 1 on a 0-decision.
                    let wrong0 = f64::from(dec == 1);
                    self.wrong[0][v] = wrong0;
                    self.right[0][v] = 1.0 - wrong0;
                    self.wrong[1][v] = 1.0 - wrong0;
                    self.right[1][v] = wrong0;
                }
                (None, Some(k)) => {
                    let p = self.probs[k].given;
                    let (c0, c1) = (2 * v + 1, 2 * v + 2);
                    for h in 0..2 {
                        self.wrong[h][v] = p[h][0] * self.wrong[h][c0] + p[h][1] * self.wrong[h][c1];
                        self.right[h][v] = p[h][0] * self.right[h][c0] + p[h][1] * self.right[h][c1];
                    }
                }
                (None, None) => unreachable!("live non-terminal nodes carry an information set"),
            }
        }
    }

    /// Change in `P{team wrong | H = h, at v}` per unit of the acting
    /// agent's own local error under `h` (a 1-vote for `h = 0`, a 0-vote for
    /// `h = 1`).
    fn swing(&self, h: usize, v: usize) -> f64 {
        let (c0, c1) = (2 * v + 1, 2 * v + 2);
        let sign = if h == 0 { 1.0 } else { -1.0 };
        let w = self.wrong[h][c1] + self.wrong[h][c0];
        let r = self.right[h][c1] + self.right[h][c0];
        if w <= r {
            sign * (self.wrong[h][c1] - self.wrong[h][c0])
        } else {
            sign * (self.right[h][c0] - self.right[h][c1])
        }
    }

    /// Exact minimization over one information set; returns the move size.
    fn update_info(&mut self, tree: &Tree, models: &[LikelihoodModel], w: (f64, f64), k: usize) -> f64 {
        let (mut a, mut b) = (0.0, 0.0);
        for &v in &tree.info_nodes[k] {
            a += self.reach[0][v] * self.swing(0, v);
            b += self.reach[1][v] * self.swing(1, v);
        }
        let model = &models[tree.info_depth[k]];
        let next = coordinate_minimizer(model, w.0 * a, w.1 * b, self.thresholds[k]);
        let change = threshold_gap(next, self.thresholds[k]);
        self.thresholds[k] = next;
        self.probs[k] = model.vote_probs(next);
        change
    }

    pub fn risk(&self, w: (f64, f64)) -> (f64, f64, f64) {
        let (e1, e2) = (self.wrong[0][0], self.wrong[1][0]);
        (w.0 * e1 + w.1 * e2, e1, e2)
    }
}

/// Person-by-person descent over the information sets of `tree`.
pub(crate) fn descend(
    tree: &Tree,
    models: &[LikelihoodModel],
    w: (f64, f64),
    start: Vec<f64>,
    order: SweepOrder,
    opts: &SolverOptions,
) -> Descent {
    let mut st = TreeState::new(tree, models, start);
    let mut by_depth: Vec<Vec<usize>> = vec![Vec::new(); tree.n];
    for (k, &d) in tree.info_depth.iter().enumerate() {
        if !tree.info_nodes[k].is_empty() {
            by_depth[d].push(k);
        }
    }
    let mut sweeps = 0;
    let mut converged = false;
    let mut worst_info = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0;
        let depths: Vec<usize> = match order {
            SweepOrder::Backward => (0..tree.n).rev().collect(),
            SweepOrder::Forward => (0..tree.n).collect(),
        };
        if order == SweepOrder::Backward {
            st.update_reach(tree);
        }
        for d in depths {
            if order == SweepOrder::Forward {
                st.update_reach(tree);
            }
            st.update_costs(tree);
            for &k in &by_depth[d] {
                let change = st.update_info(tree, models, w, k);
                if change > max_change {
                    max_change = change;
                    worst_info = k;
                }
            }
        }
        if max_change <= opts.tolerance {
            converged = true;
            break;
        }
    }
    st.update_reach(tree);
    st.update_costs(tree);
    let (risk, type_i, type_ii) = st.risk(w);
    Descent {
        thresholds: st.thresholds,
        risk,
        type_i,
        type_ii,
        sweeps,
        converged,
        worst_info,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_indexing() {
        assert_eq!((depth_of(0), bits_of(0)), (0, 0));
        assert_eq!((depth_of(1), bits_of(1)), (1, 0));
        assert_eq!((depth_of(2), bits_of(2)), (1, 1));
        // history "10": index 2^2 − 1 + 2 = 5, the 0-child of "1".
        assert_eq!((depth_of(5), bits_of(5)), (2, 2));
        assert_eq!(2 * 2 + 1, 5);
        assert_eq!((depth_of(14), bits_of(14)), (3, 7));
    }

    #[test]
    fn majority_tree_shape() {
        let rule = FusionRule::new(2, 3).unwrap();
        let tree = Tree::new(rule, vec![0; 7], |d, b| (1usize << d) - 1 + b as usize);
        // Non-terminal: "", "0", "1", "01", "10".
        let active: Vec<usize> = tree.live.iter().copied().filter(|&v| tree.info_of[v].is_some()).collect();
        assert_eq!(active, vec![0, 1, 2, 4, 5]);
        assert_eq!(tree.decision[3], Some(0)); // "00"
        assert_eq!(tree.decision[6], Some(1)); // "11"
    }
}
