//! Exact team error probabilities under `L`-out-of-`N` fusion and the Bayes
//! risk they induce.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{risk_weights, CostModel, ErrorPair, Prior, VoteProbs};

/// Distribution of the number of 1-votes under hypothesis `h`.
///
/// Votes are independent given `h`, so the count is Poisson-binomial; the
/// pmf is built by convolving one agent at a time, which only adds
/// non-negative terms.
pub(crate) fn vote_count_pmf<'a>(
    agents: impl IntoIterator<Item = &'a VoteProbs>,
    h: usize,
) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for p in agents {
        let (zero, one) = (p.given[h][0], p.given[h][1]);
        pmf.push(0.0);
        for k in (0..pmf.len()).rev() {
            let from_one = if k > 0 { pmf[k - 1] * one } else { 0.0 };
            pmf[k] = pmf[k] * zero + from_one;
        }
    }
    pmf
}

pub(crate) fn team_errors_from_probs(agents: &[VoteProbs], l: usize) -> ErrorPair {
    let pmf0 = vote_count_pmf(agents, 0);
    let pmf1 = vote_count_pmf(agents, 1);
    ErrorPair {
        type_i: pmf0[l..].iter().sum::<f64>().min(1.0),
        type_ii: pmf1[..l].iter().sum::<f64>().min(1.0),
    }
}

/// Team (Type I, Type II) errors for independent voters with the given
/// local error pairs and the `L`-out-of-`N` rule with `N = locals.len()`.
pub fn team_error_pair(locals: &[ErrorPair], l: usize) -> Result<ErrorPair> {
    if l == 0 || l > locals.len() {
        return Err(invalid(format!(
            "L = {l} is outside 1..={} for {} voters",
            locals.len(),
            locals.len()
        )));
    }
    for e in locals {
        ErrorPair::new(e.type_i, e.type_ii)?;
    }
    let probs: Vec<VoteProbs> = locals.iter().map(VoteProbs::from_errors).collect();
    Ok(team_errors_from_probs(&probs, l))
}

/// Expected cost `c10·p0·P_E^I + c01·p1·P_E^II`.
pub fn bayes_risk(prior: &Prior, costs: &CostModel, team: &ErrorPair) -> f64 {
    let (w0, w1) = risk_weights(prior, costs);
    w0 * team.type_i + w1 * team.type_ii
}

/// How the thresholds behind a [`RiskReport`] are organised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSummary {
    /// One threshold per agent, in acting order.
    PerAgent(Vec<f64>),
    /// Thresholds depend on observed votes; see the accompanying policy.
    Policy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub risk: f64,
    pub team_errors: ErrorPair,
    pub thresholds: ThresholdSummary,
}

impl RiskReport {
    pub(crate) fn new(
        prior: &Prior,
        costs: &CostModel,
        team_errors: ErrorPair,
        thresholds: ThresholdSummary,
    ) -> Self {
        Self {
            risk: bayes_risk(prior, costs, &team_errors),
            team_errors,
            thresholds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(i: f64, ii: f64) -> ErrorPair {
        ErrorPair::new(i, ii).unwrap()
    }

    /// Sums over all 2^N vote patterns.
    fn enumerate(locals: &[ErrorPair], l: usize) -> ErrorPair {
        let n = locals.len();
        let (mut fa, mut md) = (0.0, 0.0);
        for mask in 0u32..(1 << n) {
            let ones = mask.count_ones() as usize;
            let (mut p0, mut p1) = (1.0, 1.0);
            for (i, e) in locals.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    p0 *= e.type_i;
                    p1 *= 1.0 - e.type_ii;
                } else {
                    p0 *= 1.0 - e.type_i;
                    p1 *= e.type_ii;
                }
            }
            if ones >= l {
                fa += p0;
            } else {
                md += p1;
            }
        }
        pair(fa, md)
    }

    #[test]
    fn no_false_alarms_anywhere() {
        let locals = vec![pair(0.0, 0.3); 4];
        for l in 1..=4 {
            assert_eq!(team_error_pair(&locals, l).unwrap().type_i, 0.0);
        }
    }

    #[test]
    fn fair_coins_majority() {
        let t = team_error_pair(&[pair(0.5, 0.5); 3], 2).unwrap();
        assert!((t.type_i - 0.5).abs() < 1e-15);
    }

    #[test]
    fn or_rule_two_agents() {
        let t = team_error_pair(&[pair(0.1, 0.4), pair(0.2, 0.5)], 1).unwrap();
        assert!((t.type_i - 0.28).abs() < 1e-15);
        assert!((t.type_ii - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_l() {
        let locals = [pair(0.1, 0.1); 3];
        assert!(team_error_pair(&locals, 0).is_err());
        assert!(team_error_pair(&locals, 4).is_err());
        assert!(team_error_pair(&[], 1).is_err());
    }

    #[test]
    fn bayes_risk_examples() {
        let half = Prior::new(0.5).unwrap();
        let r = bayes_risk(&half, &CostModel::unit(), &pair(0.3, 0.3));
        assert!((r - 0.3).abs() < 1e-15);
        assert_eq!(bayes_risk(&half, &CostModel::unit(), &pair(0.0, 0.0)), 0.0);
        let r = bayes_risk(
            &Prior::new(0.25).unwrap(),
            &CostModel::new(2.0, 1.0).unwrap(),
            &pair(0.1, 0.2),
        );
        assert!((r - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_policies_hit_the_risk_bounds() {
        let prior = Prior::new(0.3).unwrap();
        let costs = CostModel::new(2.0, 5.0).unwrap();
        let never = team_error_pair(&[pair(0.0, 1.0); 3], 2).unwrap();
        assert_eq!(bayes_risk(&prior, &costs, &never), 5.0 * prior.p1());
        let always = team_error_pair(&[pair(1.0, 0.0); 3], 2).unwrap();
        assert_eq!(bayes_risk(&prior, &costs, &always), 2.0 * 0.3);
    }

    proptest! {
        #[test]
        fn matches_subset_enumeration(
            errs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..=10),
            l_frac in 0.0f64..1.0,
        ) {
            let locals: Vec<ErrorPair> = errs.iter().map(|&(a, b)| pair(a, b)).collect();
            let l = 1 + (l_frac * locals.len() as f64) as usize;
            let fast = team_error_pair(&locals, l).unwrap();
            let slow = enumerate(&locals, l);
            prop_assert!((fast.type_i - slow.type_i).abs() < 1e-12);
            prop_assert!((fast.type_ii - slow.type_ii).abs() < 1e-12);
        }
    }
}
