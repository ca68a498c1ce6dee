//! Optimal decision thresholds for teams of Bayesian agents that vote on a
//! binary hypothesis and fuse the votes with an `L`-out-of-`N` rule.
//!
//! Agents may vote in secret, in public (each sees every earlier vote) or
//! partially in public (each sees a fixed subset of earlier votes).

pub mod error;
pub mod exec;
pub mod fusion;
pub mod mode;
pub mod model;
pub mod partial;
pub mod public;
pub mod roc;
pub mod secret;
pub mod sim;
pub mod solver;
mod tree;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fusion::{bayes_risk, team_error_pair, RiskReport, ThresholdSummary};
pub use model::{CostModel, ErrorPair, FusionRule, LikelihoodModel, Prior, VoteProbs};
pub use secret::{optimal_identical_threshold, optimal_secret_thresholds, SecretSolution};
pub use solver::SolverOptions;
pub use public::{
    belief_at, belief_only_threshold, belief_update, evolve_fusion_state, optimal_public_policy,
    public_bayes_risk, Belief, FusionState, History, NodeThreshold, PolicySolution, Vote, VotePolicy,
};
pub use partial::{
    marginal_belief_update, optimal_partial_policy, partial_bayes_risk, ObservationGraph,
    PartialPolicy, PartialSolution,
};
pub use mode::{solve, Strategy, ThresholdRow, VotingMode};
pub use roc::{
    best_ordering, log_spaced_weights, reversed_roc, unanimity_check, AgentOrdering, OrderingSearch,
    RocCurve, RocPoint, RocSweep, UnanimityReport,
};
pub use sim::{simulate_team, SimConfig, SimCounts, SimResult};
