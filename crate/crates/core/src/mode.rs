//! One entry point for the three voting modes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fusion::RiskReport;
use crate::model::{CostModel, FusionRule, LikelihoodModel, Prior};
use crate::partial::{optimal_partial_policy_with, ObservationGraph, PartialSolution};
use crate::public::{optimal_public_policy_with, PolicySolution, VotePolicy};
use crate::secret::{optimal_secret_thresholds_with, SecretSolution};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotingMode {
    Secret,
    Public,
    Partial(ObservationGraph),
}

impl VotingMode {
    pub fn name(&self) -> &'static str {
        match self {
            VotingMode::Secret => "secret",
            VotingMode::Public => "public",
            VotingMode::Partial(_) => "partial",
        }
    }
}

/// Optimized thresholds for one voting mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Strategy {
    Secret(SecretSolution),
    Public(PolicySolution),
    Partial(PartialSolution),
}

/// One row of a threshold table: the agent, what it has seen, its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub agent: usize,
    /// `*` for secret voting, `-` for the first agent, otherwise the votes
    /// seen (with `x` for an unseen vote under partial voting).
    pub history: String,
    pub threshold: f64,
}

impl Strategy {
    pub fn report(&self, prior: &Prior, costs: &CostModel) -> RiskReport {
        match self {
            Strategy::Secret(s) => s.report(prior, costs),
            Strategy::Public(p) => p.report.clone(),
            Strategy::Partial(p) => p.report.clone(),
        }
    }

    pub fn risk(&self) -> f64 {
        match self {
            Strategy::Secret(s) => s.risk,
            Strategy::Public(p) => p.report.risk,
            Strategy::Partial(p) => p.report.risk,
        }
    }

    pub fn sweeps(&self) -> usize {
        match self {
            Strategy::Secret(s) => s.sweeps,
            Strategy::Public(p) => p.sweeps,
            Strategy::Partial(p) => p.sweeps,
        }
    }

    /// The strategy written out over full vote histories.
    pub fn vote_policy(&self, rule: FusionRule) -> VotePolicy {
        match self {
            Strategy::Secret(s) => VotePolicy::from_secret(&s.thresholds, rule),
            Strategy::Public(p) => p.policy.clone(),
            Strategy::Partial(p) => p.policy.to_vote_policy(rule),
        }
    }

    /// Thresholds that matter (don't-care nodes are left out), labeled with
    /// agent identifiers from `ordering`.
    pub fn threshold_rows(&self, ordering: &[usize]) -> Vec<ThresholdRow> {
        match self {
            Strategy::Secret(s) => s
                .thresholds
                .iter()
                .enumerate()
                .map(|(k, &t)| ThresholdRow {
                    agent: ordering[k],
                    history: "*".into(),
                    threshold: t,
                })
                .collect(),
            Strategy::Public(p) => {
                let mut rows: Vec<_> = p
                    .policy
                    .nodes
                    .iter()
                    .filter(|(_, t)| t.is_active())
                    .map(|(h, t)| (h.len(), h.to_string(), t.value()))
                    .collect();
                rows.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
                rows.into_iter()
                    .map(|(k, history, threshold)| ThresholdRow {
                        agent: ordering[k],
                        history,
                        threshold,
                    })
                    .collect()
            }
            Strategy::Partial(p) => {
                let mut rows = Vec::new();
                for (k, row) in p.policy.thresholds.iter().enumerate() {
                    for (pattern, &t) in row.iter().enumerate() {
                        let label = p.policy.graph.pattern_label(k, pattern as u32);
                        rows.push(ThresholdRow {
                            agent: ordering[k],
                            history: if label.is_empty() { "-".into() } else { label },
                            threshold: t,
                        });
                    }
                }
                rows
            }
        }
    }
}

/// Optimizes `mode` for agents acting in the order of `models`.
pub fn solve(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    mode: &VotingMode,
    opts: &SolverOptions,
) -> Result<Strategy> {
    Ok(match mode {
        VotingMode::Secret => Strategy::Secret(optimal_secret_thresholds_with(prior, costs, models, rule, opts)?),
        VotingMode::Public => Strategy::Public(optimal_public_policy_with(prior, costs, models, rule, opts)?),
        VotingMode::Partial(graph) => {
            Strategy::Partial(optimal_partial_policy_with(prior, costs, models, rule, graph, opts)?)
        }
    })
}
