//! Partially public voting: each agent sees the votes of a fixed subset of
//! the agents acting before it.
//!
//! An agent's threshold can only depend on what it sees, so all histories
//! that agree on the observed positions share one threshold. Beliefs about
//! `H` after a partial observation marginalize over the unseen votes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::fusion::{RiskReport, ThresholdSummary};
use crate::model::{risk_weights, CostModel, ErrorPair, FusionRule, LikelihoodModel, Prior};
use crate::public::{public_bayes_risk, Belief, History, NodeThreshold, Vote, VotePolicy};
use crate::secret::optimal_secret_thresholds_with;
use crate::solver::{pick_best, pick_lowest, seed_thresholds, SolverOptions};
use crate::tree::{self, SweepOrder, Tree, MAX_AGENTS};

/// Who sees whom, by acting position: `observes[n]` lists the earlier
/// positions whose votes position `n` sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct ObservationGraph {
    observes: Vec<Vec<usize>>,
}

impl ObservationGraph {
    pub fn new(mut observes: Vec<Vec<usize>>) -> Result<Self> {
        if observes.len() > MAX_AGENTS {
            return Err(invalid(format!("observation graphs support at most {MAX_AGENTS} agents")));
        }
        for (n, seen) in observes.iter_mut().enumerate() {
            seen.sort_unstable();
            seen.dedup();
            if let Some(&m) = seen.iter().find(|&&m| m >= n) {
                return Err(invalid(format!(
                    "position {n} cannot observe position {m}: edges must point to earlier agents"
                )));
            }
        }
        Ok(Self { observes })
    }

    /// Every agent sees every earlier vote.
    pub fn full(n: usize) -> Self {
        Self {
            observes: (0..n).map(|k| (0..k).collect()).collect(),
        }
    }

    /// Nobody sees anything.
    pub fn empty(n: usize) -> Self {
        Self {
            observes: vec![Vec::new(); n],
        }
    }

    /// Each agent sees only the vote right before its own.
    pub fn chain(n: usize) -> Self {
        Self {
            observes: (0..n)
                .map(|k| if k == 0 { Vec::new() } else { vec![k - 1] })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.observes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observes.is_empty()
    }

    pub fn observed(&self, position: usize) -> &[usize] {
        &self.observes[position]
    }

    /// The observed votes within `history` (which must reach `position`),
    /// packed in the order of [`observed`](Self::observed).
    fn pattern(&self, position: usize, history_bits: u32) -> u32 {
        self.observes[position].iter().fold(0, |acc, &m| {
            acc << 1 | (history_bits >> (position - 1 - m) & 1)
        })
    }

    /// Display form of an observed pattern: one character per earlier
    /// position, `x` where the vote is not seen.
    pub fn pattern_label(&self, position: usize, pattern: u32) -> String {
        let seen = &self.observes[position];
        let k = seen.len();
        (0..position)
            .map(|m| match seen.iter().position(|&s| s == m) {
                Some(i) if pattern >> (k - 1 - i) & 1 == 1 => '1',
                Some(_) => '0',
                None => 'x',
            })
            .collect()
    }
}

impl TryFrom<Vec<Vec<usize>>> for ObservationGraph {
    type Error = Error;

    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ObservationGraph> for Vec<Vec<usize>> {
    fn from(g: ObservationGraph) -> Self {
        g.observes
    }
}

/// Thresholds indexed by acting position and observed pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialPolicy {
    /// Agent identifiers in acting order.
    pub ordering: Vec<usize>,
    pub graph: ObservationGraph,
    /// `thresholds[n][pattern]`, one entry per possible observed pattern.
    pub thresholds: Vec<Vec<f64>>,
}

impl PartialPolicy {
    /// Every agent ignores what it sees and uses its secret threshold.
    pub fn from_secret(thresholds: &[f64], graph: ObservationGraph) -> Self {
        let table = thresholds
            .iter()
            .enumerate()
            .map(|(n, &t)| vec![t; 1 << graph.observed(n).len()])
            .collect();
        Self {
            ordering: (0..thresholds.len()).collect(),
            graph,
            thresholds: table,
        }
    }

    /// Threshold used at `history` by the agent acting next.
    pub fn threshold_at(&self, history: &History) -> f64 {
        let n = history.len();
        let bits = history.votes().fold(0u32, |acc, v| acc << 1 | v.bit());
        self.thresholds[n][self.graph.pattern(n, bits) as usize]
    }

    /// The same policy written out over full histories.
    pub fn to_vote_policy(&self, rule: FusionRule) -> VotePolicy {
        let mut nodes = BTreeMap::new();
        let mut stack = vec![History::root()];
        while let Some(h) = stack.pop() {
            if h.len() >= rule.n() {
                continue;
            }
            let t = self.threshold_at(&h);
            if h.state(rule).is_terminal() {
                nodes.insert(h, NodeThreshold::DontCare(t));
            } else {
                nodes.insert(h, NodeThreshold::Active(t));
                stack.push(h.push(Vote::Zero));
                stack.push(h.push(Vote::One));
            }
        }
        VotePolicy {
            ordering: self.ordering.clone(),
            nodes,
        }
    }

    fn check(&self, models: &[LikelihoodModel]) -> Result<()> {
        let n = models.len();
        if self.graph.len() != n || self.thresholds.len() != n {
            return Err(invalid(format!(
                "policy over {} positions and a graph over {} for {n} agents",
                self.thresholds.len(),
                self.graph.len()
            )));
        }
        for (k, row) in self.thresholds.iter().enumerate() {
            if row.len() != 1 << self.graph.observed(k).len() {
                return Err(Error::PolicyIncomplete {
                    history: format!("position {k}"),
                });
            }
        }
        Ok(())
    }
}

/// `P{H = 0 | observed}` for the agent at `position`, summing the joint
/// probability of every assignment of the unseen earlier votes. Every
/// earlier agent votes at its policy threshold whether or not the team
/// decision is already fixed.
pub fn marginal_belief_update(
    prior: &Prior,
    models: &[LikelihoodModel],
    policy: &PartialPolicy,
    position: usize,
    observed: &[Vote],
) -> Result<Belief> {
    policy.check(models)?;
    if position >= models.len() {
        return Err(invalid(format!("position {position} is not in a team of {}", models.len())));
    }
    let seen = policy.graph.observed(position);
    if observed.len() != seen.len() {
        return Err(invalid(format!(
            "position {position} observes {} votes, got {}",
            seen.len(),
            observed.len()
        )));
    }
    let mut joint = [0.0, 0.0];
    'paths: for h in History::all(position) {
        for (&m, &v) in seen.iter().zip(observed) {
            if h.vote(m) != v {
                continue 'paths;
            }
        }
        let mut prob = [prior.p0(), prior.p1()];
        let mut prefix = History::root();
        for v in h.votes() {
            let q = models[prefix.len()].vote_probs(policy.threshold_at(&prefix)).given;
            prob[0] *= q[0][v.bit() as usize];
            prob[1] *= q[1][v.bit() as usize];
            prefix = prefix.push(v);
        }
        joint[0] += prob[0];
        joint[1] += prob[1];
    }
    let total = joint[0] + joint[1];
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation);
    }
    Belief::new((joint[0] / total).clamp(0.0, 1.0))
}

/// Exact risk of a partial policy.
pub fn partial_bayes_risk(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    policy: &PartialPolicy,
) -> Result<RiskReport> {
    policy.check(models)?;
    public_bayes_risk(prior, costs, models, rule, &policy.to_vote_policy(rule))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSolution {
    pub policy: PartialPolicy,
    pub report: RiskReport,
    pub sweeps: usize,
}

/// Person-by-person optimal thresholds per observed pattern, for agents
/// acting in the given order.
pub fn optimal_partial_policy(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    graph: &ObservationGraph,
) -> Result<PartialSolution> {
    optimal_partial_policy_with(prior, costs, models, rule, graph, &SolverOptions::default())
}

pub fn optimal_partial_policy_with(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    graph: &ObservationGraph,
    opts: &SolverOptions,
) -> Result<PartialSolution> {
    if graph.len() != rule.n() {
        return Err(invalid(format!(
            "observation graph over {} agents for a team of N = {}",
            graph.len(),
            rule.n()
        )));
    }
    let secret = optimal_secret_thresholds_with(prior, costs, models, rule, opts)?;
    let w = risk_weights(prior, costs);

    let n = rule.n();
    let mut offset = Vec::with_capacity(n + 1);
    let mut info_depth = Vec::new();
    for k in 0..n {
        offset.push(info_depth.len());
        info_depth.extend(std::iter::repeat(k).take(1 << graph.observed(k).len()));
    }
    offset.push(info_depth.len());
    let tree = Tree::new(rule, info_depth, |d, bits| offset[d] + graph.pattern(d, bits) as usize);

    let mut starts = vec![secret.thresholds.clone()];
    starts.extend(
        opts.start_offsets
            .iter()
            .map(|&o| seed_thresholds(models, w.0, w.1, o)),
    );
    let runs = opts.execution.map(&starts, |per_agent| {
        let start = tree.info_depth.iter().map(|&d| per_agent[d]).collect();
        tree::descend(&tree, models, w, start, SweepOrder::Forward, opts)
    });
    let summary: Vec<(f64, bool)> = runs.iter().map(|d| (d.risk, d.converged)).collect();
    let Some(best) = pick_best(&summary) else {
        let d = &runs[pick_lowest(&summary)];
        let k = tree.info_depth[d.worst_info];
        let pattern = (d.worst_info - offset[k]) as u32;
        return Err(Error::Solver {
            location: format!("position {k}, observed pattern {}", graph.pattern_label(k, pattern)),
            sweeps: d.sweeps,
            best_risk: d.risk,
            best_thresholds: d.thresholds.clone(),
        });
    };
    let d = &runs[best];
    let thresholds = (0..n)
        .map(|k| d.thresholds[offset[k]..offset[k + 1]].to_vec())
        .collect();
    let team = ErrorPair {
        type_i: d.type_i.min(1.0),
        type_ii: d.type_ii.min(1.0),
    };
    Ok(PartialSolution {
        policy: PartialPolicy {
            ordering: (0..n).collect(),
            graph: graph.clone(),
            thresholds,
        },
        report: RiskReport::new(prior, costs, team, ThresholdSummary::Policy),
        sweeps: d.sweeps,
    })
}
