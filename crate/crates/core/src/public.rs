//! Public voting: agents act in a fixed order and each sees every earlier
//! vote, so thresholds may depend on the vote history.
//!
//! Observing a history changes two things for the agents still to act:
//! their belief about `H` (a Bayes update on the earlier votes) and the
//! fusion rule they effectively face (votes still needed out of agents
//! still to act). The optimizer below sees both through the history tree.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::fusion::{RiskReport, ThresholdSummary};
use crate::model::{risk_weights, CostModel, ErrorPair, FusionRule, LikelihoodModel, Prior};
use crate::secret::{optimal_identical_threshold_with, optimal_secret_thresholds_with};
use crate::solver::{pick_best, pick_lowest, seed_thresholds, SolverOptions};
use crate::tree::{self, bits_of, depth_of, SweepOrder, Tree, MAX_AGENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vote {
    Zero,
    One,
}

impl Vote {
    pub fn bit(self) -> u32 {
        match self {
            Vote::Zero => 0,
            Vote::One => 1,
        }
    }
}

impl From<bool> for Vote {
    fn from(one: bool) -> Self {
        if one {
            Vote::One
        } else {
            Vote::Zero
        }
    }
}

/// Posterior probability of `H = 0` given the votes observed so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    q0: f64,
}

impl Belief {
    pub fn new(q0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q0) {
            return Err(invalid(format!("belief q0 = {q0} is not a probability")));
        }
        Ok(Self { q0 })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn as_prior(&self) -> Prior {
        Prior::new(self.q0).expect("beliefs are probabilities")
    }
}

impl From<Prior> for Belief {
    fn from(p: Prior) -> Self {
        Self { q0: p.p0() }
    }
}

/// Bayes update of `belief` on one vote cast by an agent with local errors
/// `voter`.
pub fn belief_update(belief: Belief, voter: &ErrorPair, vote: Vote) -> Result<Belief> {
    let q = belief.q0;
    let (l0, l1) = match vote {
        Vote::Zero => (1.0 - voter.type_i, voter.type_ii),
        Vote::One => (voter.type_i, 1.0 - voter.type_ii),
    };
    let num = q * l0;
    let den = num + (1.0 - q) * l1;
    if den <= 0.0 {
        return Err(Error::ImpossibleObservation);
    }
    Belief::new((num / den).clamp(0.0, 1.0))
}

/// Votes still needed for a team decision of 1 and agents still to vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FusionState {
    pub need: i64,
    pub remaining: usize,
}

impl FusionState {
    pub fn initial(rule: FusionRule) -> Self {
        Self {
            need: rule.l() as i64,
            remaining: rule.n(),
        }
    }

    /// Team decision once it no longer depends on the remaining votes.
    pub fn decision(&self) -> Option<Vote> {
        if self.need <= 0 {
            Some(Vote::One)
        } else if self.need > self.remaining as i64 {
            Some(Vote::Zero)
        } else {
            None
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.decision().is_some()
    }

    /// The rule the remaining agents face, for non-terminal states.
    pub fn as_rule(&self) -> Option<FusionRule> {
        if self.is_terminal() {
            None
        } else {
            FusionRule::new(self.need as usize, self.remaining).ok()
        }
    }
}

/// Fusion-rule evolution: a 1-vote lowers the votes still needed, every
/// vote lowers the number of agents still to act.
pub fn evolve_fusion_state(state: FusionState, vote: Vote) -> Result<FusionState> {
    if state.is_terminal() {
        return Err(Error::TerminalState {
            need: state.need,
            remaining: state.remaining,
        });
    }
    Ok(FusionState {
        need: state.need - vote.bit() as i64,
        remaining: state.remaining - 1,
    })
}

/// Votes cast so far, in acting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History {
    len: u8,
    bits: u32,
}

impl History {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&self, vote: Vote) -> Self {
        Self {
            len: self.len + 1,
            bits: self.bits << 1 | vote.bit(),
        }
    }

    pub fn vote(&self, position: usize) -> Vote {
        assert!(position < self.len(), "position {position} not in history");
        Vote::from(self.bits >> (self.len() - 1 - position) & 1 == 1)
    }

    pub fn votes(&self) -> impl Iterator<Item = Vote> + '_ {
        (0..self.len()).map(|i| self.vote(i))
    }

    pub fn ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Drops the last vote.
    pub fn parent(&self) -> Option<Self> {
        (self.len > 0).then(|| Self {
            len: self.len - 1,
            bits: self.bits >> 1,
        })
    }

    /// Same history with the last vote flipped.
    pub fn sibling(&self) -> Option<Self> {
        (self.len > 0).then(|| Self {
            len: self.len,
            bits: self.bits ^ 1,
        })
    }

    pub fn state(&self, rule: FusionRule) -> FusionState {
        FusionState {
            need: rule.l() as i64 - self.ones() as i64,
            remaining: rule.n() - self.len(),
        }
    }

    pub(crate) fn from_index(idx: usize) -> Self {
        Self {
            len: depth_of(idx) as u8,
            bits: bits_of(idx),
        }
    }

    pub(crate) fn index(&self) -> usize {
        (1usize << self.len) - 1 + self.bits as usize
    }

    /// Every history of exactly `len` votes.
    pub fn all(len: usize) -> impl Iterator<Item = Self> {
        (0u32..1 << len).map(move |bits| Self {
            len: len as u8,
            bits,
        })
    }
}

impl fmt::Display for History {
    /// Votes as a 0/1 string; the empty history prints as `-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for v in self.votes() {
            f.write_str(if v == Vote::One { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for History {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "-" || s.is_empty() {
            return Ok(Self::root());
        }
        if s.len() > 31 {
            return Err(invalid(format!("history {s:?} is too long")));
        }
        s.chars().try_fold(Self::root(), |h, c| match c {
            '0' => Ok(h.push(Vote::Zero)),
            '1' => Ok(h.push(Vote::One)),
            _ => Err(invalid(format!("history {s:?} is not a 0/1 string"))),
        })
    }
}

impl Serialize for History {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for History {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Threshold stored at a history node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum NodeThreshold {
    Active(f64),
    /// The team decision is already fixed here; the value repeats the same
    /// agent's threshold at the sibling history.
    DontCare(f64),
}

impl NodeThreshold {
    pub fn value(&self) -> f64 {
        match *self {
            NodeThreshold::Active(t) | NodeThreshold::DontCare(t) => t,
        }
    }

    pub fn is_active(&self) -> bool {
        matches!(self, NodeThreshold::Active(_))
    }
}

/// History-dependent thresholds for agents acting in `ordering`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotePolicy {
    /// Agent identifiers in acting order.
    pub ordering: Vec<usize>,
    pub nodes: BTreeMap<History, NodeThreshold>,
}

impl VotePolicy {
    /// Public-voting policy where each agent ignores the history and uses
    /// its secret threshold.
    pub fn from_secret(thresholds: &[f64], rule: FusionRule) -> Self {
        let mut nodes = BTreeMap::new();
        let mut stack = vec![History::root()];
        while let Some(h) = stack.pop() {
            if h.len() >= rule.n() {
                continue;
            }
            let t = thresholds[h.len()];
            if h.state(rule).is_terminal() {
                nodes.insert(h, NodeThreshold::DontCare(t));
            } else {
                nodes.insert(h, NodeThreshold::Active(t));
                stack.push(h.push(Vote::Zero));
                stack.push(h.push(Vote::One));
            }
        }
        Self {
            ordering: (0..rule.n()).collect(),
            nodes,
        }
    }

    pub fn with_ordering(mut self, ordering: Vec<usize>) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn threshold(&self, h: &History) -> Option<f64> {
        self.nodes.get(h).map(NodeThreshold::value)
    }

    /// Histories at which `position` acts, with their thresholds.
    pub fn agent_nodes(&self, position: usize) -> impl Iterator<Item = (&History, &NodeThreshold)> {
        self.nodes.iter().filter(move |(h, _)| h.len() == position)
    }
}

/// Exact risk of a public-voting policy by recursion over the history tree.
///
/// Terminal histories contribute `c10·P{H=0, reach}` when the team decision
/// is 1 and `c01·P{H=1, reach}` when it is 0.
pub fn public_bayes_risk(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    policy: &VotePolicy,
) -> Result<RiskReport> {
    if models.len() != rule.n() || policy.ordering.len() != rule.n() {
        return Err(invalid(format!(
            "{} models and a policy over {} agents for a team of N = {}",
            models.len(),
            policy.ordering.len(),
            rule.n()
        )));
    }
    let mut errors = (0.0, 0.0);
    walk(models, rule, policy, History::root(), (1.0, 1.0), &mut errors)?;
    let team = ErrorPair {
        type_i: errors.0.min(1.0),
        type_ii: errors.1.min(1.0),
    };
    Ok(RiskReport::new(prior, costs, team, ThresholdSummary::Policy))
}

fn walk(
    models: &[LikelihoodModel],
    rule: FusionRule,
    policy: &VotePolicy,
    h: History,
    reach: (f64, f64),
    errors: &mut (f64, f64),
) -> Result<()> {
    match h.state(rule).decision() {
        Some(Vote::One) => errors.0 += reach.0,
        Some(Vote::Zero) => errors.1 += reach.1,
        None => {
            let t = match policy.nodes.get(&h) {
                Some(NodeThreshold::Active(t)) => *t,
                _ => {
                    return Err(Error::PolicyIncomplete {
                        history: h.to_string(),
                    })
                }
            };
            let p = models[h.len()].vote_probs(t).given;
            walk(models, rule, policy, h.push(Vote::Zero), (reach.0 * p[0][0], reach.1 * p[1][0]), errors)?;
            walk(models, rule, policy, h.push(Vote::One), (reach.0 * p[0][1], reach.1 * p[1][1]), errors)?;
        }
    }
    Ok(())
}

/// Belief after observing `history`, composing [`belief_update`] with each
/// voter's local errors at the threshold the policy assigns it.
pub fn belief_at(
    prior: &Prior,
    models: &[LikelihoodModel],
    policy: &VotePolicy,
    history: &History,
) -> Result<Belief> {
    let mut belief = Belief::from(*prior);
    let mut h = History::root();
    for v in history.votes() {
        let t = policy.threshold(&h).ok_or_else(|| Error::PolicyIncomplete {
            history: h.to_string(),
        })?;
        belief = belief_update(belief, &models[h.len()].local_error_pair(t), v)?;
        h = h.push(v);
    }
    Ok(belief)
}

/// Optimized policy with its risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySolution {
    pub policy: VotePolicy,
    pub report: RiskReport,
    pub sweeps: usize,
}

/// Person-by-person optimal history-dependent thresholds for agents acting
/// in the given order.
pub fn optimal_public_policy(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
) -> Result<PolicySolution> {
    optimal_public_policy_with(prior, costs, models, rule, &SolverOptions::default())
}

pub fn optimal_public_policy_with(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    opts: &SolverOptions,
) -> Result<PolicySolution> {
    if rule.n() > MAX_AGENTS {
        return Err(invalid(format!("public voting supports at most {MAX_AGENTS} agents")));
    }
    // Validates the prior and the models, and seeds the first start: the
    // secret optimum, which public voting can always reproduce.
    let secret = optimal_secret_thresholds_with(prior, costs, models, rule, opts)?;
    let w = risk_weights(prior, costs);

    let size = (1usize << rule.n()) - 1;
    let info_depth: Vec<usize> = (0..size).map(depth_of).collect();
    let tree = Tree::new(rule, info_depth, |d, bits| (1usize << d) - 1 + bits as usize);

    let mut starts = vec![secret.thresholds.clone()];
    starts.extend(
        opts.start_offsets
            .iter()
            .map(|&o| seed_thresholds(models, w.0, w.1, o)),
    );
    let runs = opts.execution.map(&starts, |per_agent| {
        let start = tree.info_depth.iter().map(|&d| per_agent[d]).collect();
        tree::descend(&tree, models, w, start, SweepOrder::Backward, opts)
    });
    let summary: Vec<(f64, bool)> = runs.iter().map(|d| (d.risk, d.converged)).collect();
    let Some(best) = pick_best(&summary) else {
        let d = &runs[pick_lowest(&summary)];
        return Err(Error::Solver {
            location: format!("public history {}", History::from_index(d.worst_info)),
            sweeps: d.sweeps,
            best_risk: d.risk,
            best_thresholds: d.thresholds.clone(),
        });
    };
    let d = &runs[best];

    let mut nodes = BTreeMap::new();
    for &v in &tree.live {
        let h = History::from_index(v);
        if h.len() >= rule.n() {
            continue;
        }
        let node = match tree.info_of[v] {
            Some(k) => NodeThreshold::Active(d.thresholds[k]),
            None => {
                let sib = h.sibling().expect("the root is never terminal");
                let k = tree.info_of[sib.index()]
                    .or_else(|| tree.info_of[h.parent().expect("non-root").index()])
                    .expect("a terminal history has an active sibling or parent");
                NodeThreshold::DontCare(d.thresholds[k])
            }
        };
        nodes.insert(h, node);
    }
    let team = ErrorPair {
        type_i: d.type_i.min(1.0),
        type_ii: d.type_ii.min(1.0),
    };
    Ok(PolicySolution {
        policy: VotePolicy {
            ordering: (0..rule.n()).collect(),
            nodes,
        },
        report: RiskReport::new(prior, costs, team, ThresholdSummary::Policy),
        sweeps: d.sweeps,
    })
}

/// Threshold an agent would pick from the belief update alone: the optimal
/// identical threshold of a fresh team with prior `belief` that still faces
/// the original, un-evolved rule.
pub fn belief_only_threshold(
    belief: Belief,
    costs: &CostModel,
    model: &LikelihoodModel,
    rule: FusionRule,
) -> Result<f64> {
    belief_only_threshold_with(belief, costs, model, rule, &SolverOptions::default())
}

pub fn belief_only_threshold_with(
    belief: Belief,
    costs: &CostModel,
    model: &LikelihoodModel,
    rule: FusionRule,
    opts: &SolverOptions,
) -> Result<f64> {
    let s = optimal_identical_threshold_with(&belief.as_prior(), costs, model, rule, opts)?;
    Ok(s.thresholds[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secret::optimal_secret_thresholds;
    use proptest::prelude::*;

    fn g(v: f64) -> LikelihoodModel {
        LikelihoodModel::gaussian(v).unwrap()
    }

    fn p(p0: f64) -> Prior {
        Prior::new(p0).unwrap()
    }

    /// Direct sum over all `2^N` vote paths of `P{path | H}`, counting a path
    /// as a team error by its total number of 1-votes. Votes after the
    /// decision is fixed are drawn at the history's threshold if present and
    /// integrate out otherwise.
    fn enumerate(models: &[LikelihoodModel], rule: FusionRule, policy: &VotePolicy) -> (f64, f64) {
        let n = rule.n();
        let (mut e1, mut e2) = (0.0, 0.0);
        for path in History::all(n) {
            let mut prob = [1.0, 1.0];
            let mut h = History::root();
            for v in path.votes() {
                let t = policy.threshold(&h).unwrap_or(0.5);
                let q = models[h.len()].vote_probs(t).given;
                for (hyp, pr) in prob.iter_mut().enumerate() {
                    *pr *= q[hyp][v.bit() as usize];
                }
                h = h.push(v);
            }
            if path.ones() >= rule.l() {
                e1 += prob[0];
            } else {
                e2 += prob[1];
            }
        }
        (e1, e2)
    }

    #[test]
    fn belief_update_examples() {
        let b = Belief::new(0.5).unwrap();
        let e = ErrorPair::new(0.2, 0.2).unwrap();
        assert!((belief_update(b, &e, Vote::Zero).unwrap().q0() - 0.8).abs() < 1e-15);
        let perfect = ErrorPair::new(0.0, 0.0).unwrap();
        assert_eq!(belief_update(b, &perfect, Vote::Zero).unwrap().q0(), 1.0);
        let flat = ErrorPair::new(0.3, 0.7).unwrap();
        let b = Belief::new(0.37).unwrap();
        for v in [Vote::Zero, Vote::One] {
            assert!((belief_update(b, &flat, v).unwrap().q0() - 0.37).abs() < 1e-15);
        }
        // A 1-vote from a voter who never errs under H = 0 rules out H = 0;
        // if H = 1 is already excluded the vote cannot happen.
        let b = Belief::new(1.0).unwrap();
        assert!(matches!(
            belief_update(b, &perfect, Vote::One),
            Err(Error::ImpossibleObservation)
        ));
    }

    #[test]
    fn fusion_state_examples() {
        let s = evolve_fusion_state(FusionState { need: 4, remaining: 7 }, Vote::One).unwrap();
        assert_eq!(s, FusionState { need: 3, remaining: 6 });
        let s = evolve_fusion_state(FusionState { need: 1, remaining: 3 }, Vote::One).unwrap();
        assert_eq!(s.decision(), Some(Vote::One));
        let s = evolve_fusion_state(FusionState { need: 3, remaining: 3 }, Vote::Zero).unwrap();
        assert_eq!(s.decision(), Some(Vote::Zero));
        assert!(matches!(
            evolve_fusion_state(s, Vote::One),
            Err(Error::TerminalState { .. })
        ));
        let rule = FusionRule::new(2, 4).unwrap();
        assert_eq!(FusionState::initial(rule).as_rule(), Some(rule));
    }

    #[test]
    fn history_round_trip() {
        let h: History = "0110".parse().unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.ones(), 2);
        assert_eq!(h.to_string(), "0110");
        assert_eq!(h.vote(0), Vote::Zero);
        assert_eq!(h.vote(1), Vote::One);
        assert_eq!(h.parent().unwrap().to_string(), "011");
        assert_eq!(h.sibling().unwrap().to_string(), "0111");
        assert_eq!(History::root().to_string(), "-");
        assert_eq!(History::from_index(h.index()), h);
        assert!("01x".parse::<History>().is_err());
    }

    #[test]
    fn single_agent_risk() {
        let prior = p(0.3);
        let costs = CostModel::new(2.0, 0.7).unwrap();
        let m = g(0.8);
        let rule = FusionRule::new(1, 1).unwrap();
        let policy = VotePolicy::from_secret(&[0.4], rule);
        let r = public_bayes_risk(&prior, &costs, &[m], rule, &policy).unwrap();
        let e = m.local_error_pair(0.4);
        let direct = 2.0 * 0.3 * e.type_i + 0.7 * 0.7 * e.type_ii;
        assert!((r.risk - direct).abs() < 1e-15);
    }

    #[test]
    fn two_agent_or_matches_four_paths() {
        let models = [g(0.4), g(1.3)];
        let rule = FusionRule::or(2).unwrap();
        let mut policy = VotePolicy::from_secret(&[0.2, 0.9], rule);
        policy.nodes.insert("0".parse().unwrap(), NodeThreshold::Active(0.35));
        let r = public_bayes_risk(&p(0.5), &CostModel::unit(), &models, rule, &policy).unwrap();
        let a = models[0].vote_probs(0.2).given;
        let b = models[1].vote_probs(0.35).given;
        // OR errs under H = 0 unless both vote 0, under H = 1 only if both do.
        let e1 = 1.0 - a[0][0] * b[0][0];
        let e2 = a[1][0] * b[1][0];
        assert!((r.team_errors.type_i - e1).abs() < 1e-15);
        assert!((r.team_errors.type_ii - e2).abs() < 1e-15);
    }

    #[test]
    fn missing_node_is_reported() {
        let rule = FusionRule::new(2, 3).unwrap();
        let mut policy = VotePolicy::from_secret(&[0.5; 3], rule);
        policy.nodes.remove(&"01".parse().unwrap());
        let err = public_bayes_risk(&p(0.5), &CostModel::unit(), &[g(1.0); 3], rule, &policy).unwrap_err();
        assert!(matches!(err, Error::PolicyIncomplete { ref history } if history == "01"));
    }

    #[test]
    fn iid_secret_policy_reproduces_secret_risk() {
        let prior = p(0.25);
        let rule = FusionRule::new(4, 7).unwrap();
        let m = g(1.0);
        let s = optimal_secret_thresholds(&prior, &CostModel::unit(), &[m; 7], rule).unwrap();
        let policy = VotePolicy::from_secret(&s.thresholds, rule);
        let r = public_bayes_risk(&prior, &CostModel::unit(), &[m; 7], rule, &policy).unwrap();
        assert!((r.risk - s.risk).abs() < 1e-12);
    }

    #[test]
    fn iid_public_optimum_keeps_the_secret_thresholds() {
        let prior = p(0.35);
        let costs = CostModel::new(1.0, 1.5).unwrap();
        for (l, n) in [(1, 3), (2, 3), (3, 5), (2, 5)] {
            let rule = FusionRule::new(l, n).unwrap();
            let models = vec![g(0.9); n];
            let s = optimal_secret_thresholds(&prior, &costs, &models, rule).unwrap();
            let pol = optimal_public_policy(&prior, &costs, &models, rule).unwrap();
            assert!((pol.report.risk - s.risk).abs() < 1e-10, "{rule}");
            for node in pol.policy.nodes.values().filter(|t| t.is_active()) {
                assert!((node.value() - s.thresholds[0]).abs() < 1e-6, "{rule}");
            }
        }
    }

    #[test]
    fn heterogeneous_majority_gains_from_public_votes() {
        let models = [g(0.25), g(1.0), g(2.25)];
        let rule = FusionRule::new(2, 3).unwrap();
        let prior = p(0.5);
        let s = optimal_secret_thresholds(&prior, &CostModel::unit(), &models, rule).unwrap();
        let pol = optimal_public_policy(&prior, &CostModel::unit(), &models, rule).unwrap();
        assert!(pol.report.risk < s.risk - 1e-6, "{} vs {}", pol.report.risk, s.risk);
        let r = public_bayes_risk(&prior, &CostModel::unit(), &models, rule, &pol.policy).unwrap();
        assert!((r.risk - pol.report.risk).abs() < 1e-12);
    }

    #[test]
    fn or_rule_uses_secret_thresholds_on_the_zero_path() {
        let models = [g(0.3), g(1.1), g(2.0)];
        let rule = FusionRule::or(3).unwrap();
        let prior = p(0.6);
        let s = optimal_secret_thresholds(&prior, &CostModel::unit(), &models, rule).unwrap();
        let pol = optimal_public_policy(&prior, &CostModel::unit(), &models, rule).unwrap();
        let mut h = History::root();
        for t in &s.thresholds {
            let node = pol.policy.nodes[&h];
            assert!(node.is_active());
            assert!((node.value() - t).abs() < 1e-6);
            h = h.push(Vote::Zero);
        }
        let active = pol.policy.nodes.values().filter(|t| t.is_active()).count();
        assert_eq!(active, 3);
        // "1" is decided; it repeats the threshold at "0".
        let one = pol.policy.nodes[&"1".parse().unwrap()];
        assert_eq!(one, NodeThreshold::DontCare(pol.policy.nodes[&"0".parse().unwrap()].value()));
    }

    #[test]
    fn belief_only_examples() {
        let prior = p(0.25);
        let rule = FusionRule::new(4, 7).unwrap();
        let m = g(1.0);
        let alexis = optimal_identical_threshold_with(&prior, &CostModel::unit(), &m, rule, &SolverOptions::default())
            .unwrap()
            .thresholds[0];
        let root = belief_only_threshold(prior.into(), &CostModel::unit(), &m, rule).unwrap();
        assert_eq!(root, alexis);
        let e = m.local_error_pair(alexis);
        let after0 = belief_update(prior.into(), &e, Vote::Zero).unwrap();
        let t0 = belief_only_threshold(after0, &CostModel::unit(), &m, rule).unwrap();
        assert!((t0 - alexis).abs() > 1e-3);
        let b01 = belief_update(after0, &e, Vote::One).unwrap();
        let b10 = belief_update(belief_update(prior.into(), &e, Vote::One).unwrap(), &e, Vote::Zero).unwrap();
        assert!((b01.q0() - b10.q0()).abs() < 1e-15);
    }

    fn arb_models(n: usize) -> impl Strategy<Value = Vec<LikelihoodModel>> {
        prop::collection::vec(0.1f64..3.0, n).prop_map(|vs| vs.into_iter().map(g).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tree_risk_matches_path_enumeration(
            (n, l, models, ts) in (1usize..=10)
                .prop_flat_map(|n| (Just(n), 1..=n, arb_models(n), prop::collection::vec(-1.5f64..2.5, (1 << n) - 1))),
            p0 in 0.05f64..0.95,
        ) {
            let rule = FusionRule::new(l, n).unwrap();
            let mut policy = VotePolicy::from_secret(&vec![0.0; n], rule);
            for (h, t) in policy.nodes.iter_mut() {
                *t = NodeThreshold::Active(ts[h.index()]);
            }
            let r = public_bayes_risk(&p(p0), &CostModel::unit(), &models, rule, &policy).unwrap();
            let (e1, e2) = enumerate(&models, rule, &policy);
            prop_assert!((r.team_errors.type_i - e1).abs() < 1e-12);
            prop_assert!((r.team_errors.type_ii - e2).abs() < 1e-12);
        }

        #[test]
        fn chained_beliefs_match_the_joint_posterior(
            (n, models, ts) in (1usize..=6)
                .prop_flat_map(|n| (Just(n), arb_models(n), prop::collection::vec(-1.0f64..2.0, (1 << n) - 1))),
            p0 in 0.05f64..0.95,
            path in any::<u32>(),
        ) {
            // Give every history a threshold so that any path can be followed.
            let mut nodes = BTreeMap::new();
            for len in 0..n {
                for h in History::all(len) {
                    nodes.insert(h, NodeThreshold::Active(ts[h.index()]));
                }
            }
            let policy = VotePolicy { ordering: (0..n).collect(), nodes };
            let len = path as usize % (n + 1);
            let history = History::all(len).nth((path >> 8) as usize % (1 << len)).unwrap();
            let b = belief_at(&p(p0), &models, &policy, &history).unwrap();
            let mut joint = [p0, 1.0 - p0];
            let mut h = History::root();
            for v in history.votes() {
                let q = models[h.len()].vote_probs(ts[h.index()]).given;
                joint[0] *= q[0][v.bit() as usize];
                joint[1] *= q[1][v.bit() as usize];
                h = h.push(v);
            }
            prop_assert!((b.q0() - joint[0] / (joint[0] + joint[1])).abs() < 1e-12);
        }
    }
}
