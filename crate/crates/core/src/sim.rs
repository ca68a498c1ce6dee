//! Monte Carlo runs of the voting protocol, to check the analytic error
//! probabilities end to end.
//!
//! Trial `t` draws from its own ChaCha8 stream `t` under the run's seed, so
//! results do not depend on how trials are split across threads. Counts are
//! integers and sum exactly.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::fusion::RiskReport;
use crate::model::{CostModel, ErrorPair, FusionRule, LikelihoodModel, Prior};
use crate::public::{public_bayes_risk, History, Vote, VotePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("a simulation needs at least one trial"));
        }
        Ok(Self { trials, seed })
    }
}

/// Raw tallies of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimCounts {
    /// Trials with `H = 0` and `H = 1`.
    pub h0: u64,
    pub h1: u64,
    /// Team decided 1 under `H = 0`, and 0 under `H = 1`.
    pub type_i: u64,
    pub type_ii: u64,
}

impl SimCounts {
    fn add(self, o: Self) -> Self {
        Self {
            h0: self.h0 + o.h0,
            h1: self.h1 + o.h1,
            type_i: self.type_i + o.type_i,
            type_ii: self.type_ii + o.type_ii,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub counts: SimCounts,
    /// Empirical `P{decide 1 | H = 0}` and `P{decide 0 | H = 1}`.
    pub team_errors: ErrorPair,
    /// Empirical mean loss per trial.
    pub risk: f64,
    /// Binomial standard errors of the two error rates, and the standard
    /// error of the mean loss.
    pub se_type_i: f64,
    pub se_type_ii: f64,
    pub se_risk: f64,
    /// Exact values for the same policy.
    pub analytic: RiskReport,
}

fn rate(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Uniform on the open interval `(0, 1)` from the top 53 bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Runs `config.trials` rounds: draw `H` from the prior, draw each agent's
/// signal, let agents vote in order at the policy's thresholds until the
/// team decision is fixed.
pub fn simulate_team(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    policy: &VotePolicy,
    config: &SimConfig,
    execution: Execution,
) -> Result<SimResult> {
    if config.trials == 0 {
        return Err(invalid("a simulation needs at least one trial"));
    }
    // Rejects incomplete policies before any sampling.
    let analytic = public_bayes_risk(prior, costs, models, rule, policy)?;
    let thresholds: Vec<f64> = (0..(1usize << rule.n()) - 1)
        .map(|i| {
            policy
                .threshold(&History::from_index(i))
                .unwrap_or(f64::NAN)
        })
        .collect();

    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let run = |trial: u64| -> SimCounts {
        let mut rng = base.clone();
        rng.set_stream(trial);
        let h = usize::from(uniform(&mut rng) >= prior.p0());
        let mut node = History::root();
        let decision = loop {
            if let Some(d) = node.state(rule).decision() {
                break d;
            }
            let y = models[node.len()].sample(h, uniform(&mut rng));
            node = node.push(Vote::from(y >= thresholds[node.index()]));
        };
        SimCounts {
            h0: (h == 0) as u64,
            h1: (h == 1) as u64,
            type_i: (h == 0 && decision == Vote::One) as u64,
            type_ii: (h == 1 && decision == Vote::Zero) as u64,
        }
    };

    const CHUNK: u64 = 1 << 14;
    let chunks = config.trials.div_ceil(CHUNK) as usize;
    let partial = execution.map_range(chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(config.trials);
        (start..end).map(run).fold(SimCounts::default(), SimCounts::add)
    });
    let counts = partial.into_iter().fold(SimCounts::default(), SimCounts::add);

    let (p1, se1) = rate(counts.type_i, counts.h0);
    let (p2, se2) = rate(counts.type_ii, counts.h1);
    let t = config.trials as f64;
    let (c10, c01) = (costs.c10(), costs.c01());
    let mean = (c10 * counts.type_i as f64 + c01 * counts.type_ii as f64) / t;
    let second = (c10 * c10 * counts.type_i as f64 + c01 * c01 * counts.type_ii as f64) / t;
    let se_risk = ((second - mean * mean).max(0.0) / t).sqrt();
    Ok(SimResult {
        config: *config,
        counts,
        team_errors: ErrorPair {
            type_i: p1,
            type_ii: p2,
        },
        risk: mean,
        se_type_i: se1,
        se_type_ii: se2,
        se_risk,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: f64) -> LikelihoodModel {
        LikelihoodModel::gaussian(v).unwrap()
    }

    #[test]
    fn near_perfect_agents_never_err() {
        let rule = FusionRule::new(2, 3).unwrap();
        let policy = VotePolicy::from_secret(&[0.5; 3], rule);
        let r = simulate_team(
            &Prior::new(0.5).unwrap(),
            &CostModel::unit(),
            &[g(1e-8); 3],
            rule,
            &policy,
            &SimConfig::new(100_000, 7).unwrap(),
            Execution::default(),
        )
        .unwrap();
        assert_eq!((r.counts.type_i, r.counts.type_ii), (0, 0));
        assert_eq!(r.counts.h0 + r.counts.h1, 100_000);
    }

    #[test]
    fn same_seed_same_counts_in_any_mode() {
        let rule = FusionRule::new(2, 3).unwrap();
        let policy = VotePolicy::from_secret(&[0.3, 0.5, 0.7], rule);
        let args = (Prior::new(0.4).unwrap(), CostModel::new(1.0, 2.0).unwrap(), [g(0.5), g(1.0), g(2.0)]);
        let go = |seed, ex| {
            simulate_team(&args.0, &args.1, &args.2, rule, &policy, &SimConfig::new(50_000, seed).unwrap(), ex).unwrap()
        };
        let a = go(11, Execution::Sequential);
        let b = go(11, Execution::Parallel);
        assert_eq!(a, b);
        assert_ne!(a.counts, go(12, Execution::Sequential).counts);
    }

    #[test]
    fn incomplete_policy_is_rejected() {
        let rule = FusionRule::new(2, 3).unwrap();
        let mut policy = VotePolicy::from_secret(&[0.5; 3], rule);
        policy.nodes.remove(&"1".parse().unwrap());
        let r = simulate_team(
            &Prior::new(0.5).unwrap(),
            &CostModel::unit(),
            &[g(1.0); 3],
            rule,
            &policy,
            &SimConfig::new(10, 1).unwrap(),
            Execution::Sequential,
        );
        assert!(r.is_err());
        assert!(SimConfig::new(0, 1).is_err());
    }

    #[test]
    fn majority_of_three_within_three_standard_errors() {
        let rule = FusionRule::new(2, 3).unwrap();
        let policy = VotePolicy::from_secret(&[0.5; 3], rule);
        let r = simulate_team(
            &Prior::new(0.5).unwrap(),
            &CostModel::unit(),
            &[g(1.0); 3],
            rule,
            &policy,
            &SimConfig::new(1_000_000, 2024).unwrap(),
            Execution::default(),
        )
        .unwrap();
        // Analytic: 3q²(1 − q) + q³ with q = Q(1/2).
        let q = 0.308_537_538_725_986_9_f64;
        let exact = 3.0 * q * q * (1.0 - q) + q.powi(3);
        assert!((r.analytic.team_errors.type_i - exact).abs() < 1e-15);
        assert!((r.team_errors.type_i - exact).abs() < 3.0 * r.se_type_i);
    }
}
