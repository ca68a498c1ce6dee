//! Operating curves, acting-order search and the unanimity checks for teams
//! of agents with different likelihoods.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::fusion::RiskReport;
use crate::mode::{solve, VotingMode};
use crate::model::{CostModel, ErrorPair, FusionRule, LikelihoodModel, Prior};
use crate::public::{optimal_public_policy_with, PolicySolution};
use crate::secret::optimal_secret_thresholds_with;
use crate::solver::SolverOptions;

/// Acting order: `ordering[k]` is the agent that acts `k`-th.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct AgentOrdering(Vec<usize>);

impl AgentOrdering {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &a in &order {
            if a >= order.len() || std::mem::replace(&mut seen[a], true) {
                return Err(invalid(format!("{order:?} is not a permutation of 0..{}", order.len())));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Models rearranged into acting order.
    pub fn arrange<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.0.iter().map(|&a| items[a].clone()).collect()
    }

    /// Position at which `agent` acts.
    pub fn position(&self, agent: usize) -> Option<usize> {
        self.0.iter().position(|&a| a == agent)
    }
}

impl fmt::Display for AgentOrdering {
    /// Agent identifiers joined by `-`, e.g. `1-0-2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("-"))
    }
}

impl TryFrom<Vec<usize>> for AgentOrdering {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AgentOrdering> for Vec<usize> {
    fn from(o: AgentOrdering) -> Self {
        o.0
    }
}

/// `count` weights spaced evenly in log scale over `[lo, hi]`.
pub fn log_spaced_weights(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub weight: f64,
    pub team_errors: ErrorPair,
    /// `weight·P_E^I + P_E^II`.
    pub risk: f64,
}

/// Pareto-pruned operating points, by increasing `P_E^I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Keeps the points that no other point beats in both error types.
    pub fn pareto(mut points: Vec<RocPoint>) -> Self {
        const EPS: f64 = 1e-12;
        points.sort_by(|a, b| {
            a.team_errors
                .type_i
                .total_cmp(&b.team_errors.type_i)
                .then(a.team_errors.type_ii.total_cmp(&b.team_errors.type_ii))
        });
        let mut kept: Vec<RocPoint> = Vec::new();
        for p in points {
            match kept.last() {
                Some(last) if p.team_errors.type_ii >= last.team_errors.type_ii - EPS => {}
                _ => kept.push(p),
            }
        }
        Self { points: kept }
    }
}

/// Result of a weight sweep: every optimized point in sweep order, plus
/// the weights at which the optimizer failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSweep {
    pub mode: String,
    pub ordering: AgentOrdering,
    pub points: Vec<RocPoint>,
    pub skipped: Vec<(f64, String)>,
}

impl RocSweep {
    pub fn curve(&self) -> RocCurve {
        RocCurve::pareto(self.points.clone())
    }
}

/// Optimizes `w·P_E^I + P_E^II` at each weight `w` for the agents acting in
/// `ordering` (equivalently: unit costs and `p0 = w / (1 + w)`).
pub fn reversed_roc(
    models: &[LikelihoodModel],
    rule: FusionRule,
    mode: &VotingMode,
    ordering: &AgentOrdering,
    weights: &[f64],
    opts: &SolverOptions,
) -> Result<RocSweep> {
    if weights.is_empty() {
        return Err(invalid("an operating-curve sweep needs at least one weight"));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(invalid(format!("sweep weight {w} is not a positive real")));
    }
    if ordering.len() != models.len() {
        return Err(invalid(format!(
            "ordering over {} agents for {} models",
            ordering.len(),
            models.len()
        )));
    }
    let arranged = ordering.arrange(models);
    let results = opts.execution.map(weights, |&w| {
        let prior = Prior::new(w / (1.0 + w))?;
        let s = solve(&prior, &CostModel::unit(), &arranged, rule, mode, opts)?;
        let e = s.report(&prior, &CostModel::unit()).team_errors;
        Ok::<_, Error>(RocPoint {
            weight: w,
            team_errors: e,
            risk: w * e.type_i + e.type_ii,
        })
    });
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (&w, r) in weights.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e @ Error::Solver { .. }) => skipped.push((w, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(RocSweep {
        mode: mode.name().into(),
        ordering: ordering.clone(),
        points,
        skipped,
    })
}

/// Largest team for which [`best_ordering`] enumerates orderings.
pub const MAX_ORDERING_SEARCH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOrdering {
    pub ordering: AgentOrdering,
    pub risk: f64,
    /// Orderings that share this one's optimal risk by symmetry, including
    /// itself.
    pub equivalent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSearch {
    pub best: AgentOrdering,
    pub solution: PolicySolution,
    /// Representatives by increasing risk; risks within `1e-12` count as
    /// tied and tied orderings are listed lexicographically.
    pub ranking: Vec<RankedOrdering>,
}

impl OrderingSearch {
    pub fn report(&self) -> &RiskReport {
        &self.solution.report
    }
}

fn is_unanimity_state(need: usize, remaining: usize) -> bool {
    need == 1 || need == remaining
}

/// First depth at which every reachable undecided subproblem has a
/// unanimity rule. From there on the acting order of the remaining agents
/// cannot change the optimal risk.
pub fn symmetric_depth(rule: FusionRule) -> usize {
    let (l, n) = (rule.l(), rule.n());
    (0..n)
        .find(|&d| {
            let remaining = n - d;
            (0..=d)
                .filter_map(|ones| l.checked_sub(ones))
                .filter(|&need| need >= 1 && need <= remaining)
                .all(|need| is_unanimity_state(need, remaining))
        })
        .unwrap_or(n)
}

/// One ordering per symmetry class: every arrangement of the first
/// [`symmetric_depth`] positions, with the rest in ascending order.
pub fn ordering_representatives(rule: FusionRule) -> Vec<(AgentOrdering, usize)> {
    let n = rule.n();
    let d = symmetric_depth(rule);
    let tail: usize = (1..=n - d).product();
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    fn extend(n: usize, d: usize, tail: usize, prefix: &mut Vec<usize>, out: &mut Vec<(AgentOrdering, usize)>) {
        if prefix.len() == d {
            let mut order = prefix.clone();
            order.extend((0..n).filter(|a| !prefix.contains(a)));
            out.push((AgentOrdering(order), tail));
            return;
        }
        for a in 0..n {
            if !prefix.contains(&a) {
                prefix.push(a);
                extend(n, d, tail, prefix, out);
                prefix.pop();
            }
        }
    }
    extend(n, d, tail, &mut prefix, &mut out);
    out
}

/// Sorts by risk, clustering risks within `tol` of the cluster's first
/// member and ordering each cluster lexicographically.
fn rank(mut items: Vec<RankedOrdering>, tol: f64) -> Vec<RankedOrdering> {
    items.sort_by(|a, b| a.risk.total_cmp(&b.risk).then(a.ordering.cmp(&b.ordering)));
    let mut out = Vec::with_capacity(items.len());
    let mut start = 0;
    while start < items.len() {
        let anchor = items[start].risk;
        let mut end = start + 1;
        while end < items.len() && items[end].risk - anchor <= tol {
            end += 1;
        }
        let mut cluster = items[start..end].to_vec();
        cluster.sort_by(|a, b| a.ordering.cmp(&b.ordering));
        out.extend(cluster);
        start = end;
    }
    out
}

/// Public-voting acting order with the lowest optimal risk.
pub fn best_ordering(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    opts: &SolverOptions,
) -> Result<OrderingSearch> {
    if rule.n() != models.len() {
        return Err(invalid(format!("{} models for a team of N = {}", models.len(), rule.n())));
    }
    if rule.n() > MAX_ORDERING_SEARCH {
        return Err(invalid(format!(
            "ordering search is limited to N <= {MAX_ORDERING_SEARCH}; give an explicit ordering instead"
        )));
    }
    let reps = ordering_representatives(rule);
    let solved = opts.execution.map(&reps, |(o, _)| {
        optimal_public_policy_with(prior, costs, &o.arrange(models), rule, opts)
    });
    let mut ranked = Vec::with_capacity(reps.len());
    let mut solutions = Vec::with_capacity(reps.len());
    for ((ordering, equivalent), s) in reps.into_iter().zip(solved) {
        let s = s?;
        ranked.push(RankedOrdering {
            ordering: ordering.clone(),
            risk: s.report.risk,
            equivalent,
        });
        solutions.push((ordering, s));
    }
    let ranking = rank(ranked, 1e-12);
    let best = ranking[0].ordering.clone();
    let (_, solution) = solutions
        .into_iter()
        .find(|(o, _)| *o == best)
        .expect("the winner was solved");
    let solution = PolicySolution {
        policy: solution.policy.with_ordering(best.as_slice().to_vec()),
        ..solution
    };
    Ok(OrderingSearch {
        best,
        solution,
        ranking,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnanimityChecks {
    pub orderings_checked: usize,
    /// Largest `|public − secret|` optimal risk over the orderings.
    pub public_secret_gap: f64,
    /// Largest `|risk(ordering) − risk(identity)|`.
    pub ordering_gap: f64,
    /// Largest spread of one agent's threshold across acting positions.
    pub position_gap: f64,
    /// Largest spread of one agent's threshold across the histories at
    /// which it acts.
    pub history_gap: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnanimityReport {
    pub rule: FusionRule,
    pub unanimity: bool,
    pub checks: Option<UnanimityChecks>,
}

/// Orderings compared by [`unanimity_check`]: all of them up to six agents,
/// the cyclic rotations beyond that.
fn check_orderings(n: usize) -> Vec<AgentOrdering> {
    if n <= 6 {
        let mut all = Vec::new();
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut all);
        all.sort();
        all
    } else {
        (0..n)
            .map(|s| AgentOrdering((0..n).map(|k| (k + s) % n).collect()))
            .collect()
    }
}

fn permutations(perm: &mut Vec<usize>, k: usize, out: &mut Vec<AgentOrdering>) {
    if k == perm.len() {
        out.push(AgentOrdering(perm.clone()));
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permutations(perm, k + 1, out);
        perm.swap(k, i);
    }
}

/// For `L = 1` or `L = N`, confirms that public voting gains nothing over
/// secret voting, that the acting order does not matter, and that each
/// agent's threshold depends neither on its position nor on what it saw.
pub fn unanimity_check(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    opts: &SolverOptions,
) -> Result<UnanimityReport> {
    if !rule.is_unanimity() {
        return Ok(UnanimityReport {
            rule,
            unanimity: false,
            checks: None,
        });
    }
    if rule.n() != models.len() {
        return Err(invalid(format!("{} models for a team of N = {}", models.len(), rule.n())));
    }
    let n = rule.n();
    let secret = optimal_secret_thresholds_with(prior, costs, models, rule, opts)?;
    let orderings = check_orderings(n);
    let solved = opts.execution.map(&orderings, |o| {
        optimal_public_policy_with(prior, costs, &o.arrange(models), rule, opts)
    });
    let mut per_agent: Vec<Vec<f64>> = vec![Vec::new(); n];
    let (mut public_secret_gap, mut ordering_gap, mut history_gap) = (0f64, 0f64, 0f64);
    let mut identity_risk = None;
    for (o, s) in orderings.iter().zip(solved) {
        let s = s?;
        let risk = s.report.risk;
        public_secret_gap = public_secret_gap.max((risk - secret.risk).abs());
        let base = *identity_risk.get_or_insert(risk);
        ordering_gap = ordering_gap.max((risk - base).abs());
        for (k, &agent) in o.as_slice().iter().enumerate() {
            let ts: Vec<f64> = s
                .policy
                .agent_nodes(k)
                .filter(|(_, t)| t.is_active())
                .map(|(_, t)| t.value())
                .collect();
            history_gap = history_gap.max(spread(&ts));
            per_agent[agent].extend(ts);
        }
    }
    let position_gap = per_agent.iter().map(|ts| spread(ts)).fold(0.0, f64::max);
    let passed = public_secret_gap < 1e-8 && ordering_gap < 1e-8 && position_gap < 1e-6 && history_gap < 1e-6;
    Ok(UnanimityReport {
        rule,
        unanimity: true,
        checks: Some(UnanimityChecks {
            orderings_checked: orderings.len(),
            public_secret_gap,
            ordering_gap,
            position_gap,
            history_gap,
            passed,
        }),
    })
}

/// `max − min`, with equal infinities counting as no spread.
fn spread(ts: &[f64]) -> f64 {
    let Some(&first) = ts.first() else { return 0.0 };
    ts.iter()
        .map(|&t| crate::model::threshold_gap(t, first))
        .fold(0.0, f64::max)
}
