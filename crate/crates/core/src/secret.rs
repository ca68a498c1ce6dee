//! Secret voting: every agent votes on its private signal alone.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fusion::{team_errors_from_probs, vote_count_pmf, ThresholdSummary, RiskReport};
use crate::model::{
    risk_weights, threshold_gap, CostModel, ErrorPair, FusionRule, LikelihoodModel, Prior,
    VoteProbs,
};
use crate::solver::{
    coordinate_minimizer, lrt_residual, pick_best, pick_lowest, seed_thresholds, SolverOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecretSolution {
    /// One threshold per agent, in the order the models were given.
    pub thresholds: Vec<f64>,
    pub risk: f64,
    pub team_errors: ErrorPair,
    /// Per-agent residual of the optimality condition `LR(λ) = RHS`, as
    /// `|ln LR(λ) − ln RHS|` (identical-threshold solutions report the
    /// relative residual `|LR/RHS − 1|`).
    pub fixed_point_residuals: Vec<f64>,
    pub sweeps: usize,
}

impl SecretSolution {
    pub fn report(&self, prior: &Prior, costs: &CostModel) -> RiskReport {
        RiskReport::new(
            prior,
            costs,
            self.team_errors,
            ThresholdSummary::PerAgent(self.thresholds.clone()),
        )
    }
}

pub(crate) fn secret_team_errors(models: &[LikelihoodModel], thresholds: &[f64], l: usize) -> ErrorPair {
    let probs: Vec<VoteProbs> = models
        .iter()
        .zip(thresholds)
        .map(|(m, &t)| m.vote_probs(t))
        .collect();
    team_errors_from_probs(&probs, l)
}

fn k_ln(k: usize, ln_p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_p
    }
}

/// `ln LR(λ) − ln RHS(λ)` for the identical-threshold optimality condition
/// where one agent is pivotal among `N − 1` identical peers:
/// `RHS = c10·p0·P_I^{L−1}(1−P_I)^{N−L} / (c01·p1·P_II^{N−L}(1−P_II)^{L−1})`.
fn identical_condition(model: &LikelihoodModel, w0: f64, w1: f64, rule: FusionRule, lambda: f64) -> f64 {
    let (n, l) = (rule.n(), rule.l());
    let p = model.vote_probs(lambda).given;
    let num = w0.ln() + k_ln(l - 1, p[0][1].ln()) + k_ln(n - l, p[0][0].ln());
    let den = w1.ln() + k_ln(n - l, p[1][0].ln()) + k_ln(l - 1, p[1][1].ln());
    let llr = model
        .log_likelihood_ratio(lambda)
        .unwrap_or(f64::NEG_INFINITY);
    llr - (num - den)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Root of an increasing-through-zero function on `[lo, hi]` with
/// `f(lo) < 0 < f(hi)`, to machine precision.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Best common threshold for `N` agents sharing one likelihood model.
pub fn optimal_identical_threshold(
    prior: &Prior,
    costs: &CostModel,
    model: &LikelihoodModel,
    rule: FusionRule,
) -> Result<SecretSolution> {
    optimal_identical_threshold_with(prior, costs, model, rule, &SolverOptions::default())
}

pub fn optimal_identical_threshold_with(
    prior: &Prior,
    costs: &CostModel,
    model: &LikelihoodModel,
    rule: FusionRule,
    opts: &SolverOptions,
) -> Result<SecretSolution> {
    prior.require_interior()?;
    model.validate()?;
    let (w0, w1) = risk_weights(prior, costs);
    let n = rule.n();
    let risk = |lambda: f64| {
        let probs = vec![model.vote_probs(lambda); n];
        let e = team_errors_from_probs(&probs, rule.l());
        w0 * e.type_i + w1 * e.type_ii
    };

    // Coarse scan, so that a non-unimodal risk cannot trap the refinement.
    let (lo, hi) = model.search_bracket();
    let k = opts.grid_points.max(3);
    let grid: Vec<f64> = (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| risk(x)).collect();
    let best = (0..k)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("grid is non-empty");

    let mut lambda = grid[best];
    let mut value = values[best];
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(k - 1)];
    if left < right {
        let x = golden_section(risk, left, right, 1e-10);
        // Polish on the first-order condition, which pins the stationary
        // point far below the resolution at which the risk itself changes.
        let cond = |x: f64| identical_condition(model, w0, w1, rule, x);
        let x = if cond(left) < 0.0 && cond(right) > 0.0 {
            bisect(cond, left, right)
        } else {
            x
        };
        if risk(x) <= value {
            lambda = x;
            value = risk(x);
        }
    }
    // Silencing every agent (all vote 0 or all vote 1) may beat the grid.
    for edge in [f64::NEG_INFINITY, f64::INFINITY] {
        if risk(edge) < value {
            lambda = edge;
            value = risk(edge);
        }
    }

    let residual = if lambda.is_finite() {
        identical_condition(model, w0, w1, rule, lambda).exp_m1().abs()
    } else {
        0.0
    };
    if residual > 1e-8 {
        return Err(Error::Solver {
            location: format!("identical threshold ({rule})"),
            sweeps: 0,
            best_risk: value,
            best_thresholds: vec![lambda; n],
        });
    }
    let thresholds = vec![lambda; n];
    let team_errors = secret_team_errors(&vec![*model; n], &thresholds, rule.l());
    Ok(SecretSolution {
        risk: w0 * team_errors.type_i + w1 * team_errors.type_ii,
        team_errors,
        fixed_point_residuals: vec![residual; n],
        thresholds,
        sweeps: 0,
    })
}

struct Descent {
    thresholds: Vec<f64>,
    risk: f64,
    sweeps: usize,
    converged: bool,
    worst_agent: usize,
}

/// Pivotal weights `(a, b)` of agent `agent`: the risk is
/// `const + a·P_I + b·P_II` in its own local errors.
fn pivot_weights(probs: &[VoteProbs], agent: usize, l: usize, w0: f64, w1: f64) -> (f64, f64) {
    let others = probs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != agent)
        .map(|(_, p)| p);
    let pmf0 = vote_count_pmf(others.clone(), 0);
    let pmf1 = vote_count_pmf(others, 1);
    (w0 * pmf0[l - 1], w1 * pmf1[l - 1])
}

fn coordinate_descent(
    models: &[LikelihoodModel],
    l: usize,
    w0: f64,
    w1: f64,
    start: Vec<f64>,
    opts: &SolverOptions,
) -> Descent {
    let mut thresholds = start;
    let mut probs: Vec<VoteProbs> = models
        .iter()
        .zip(&thresholds)
        .map(|(m, &t)| m.vote_probs(t))
        .collect();
    let mut sweeps = 0;
    let mut converged = false;
    let mut worst_agent = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0;
        for n in 0..models.len() {
            let (a, b) = pivot_weights(&probs, n, l, w0, w1);
            let next = coordinate_minimizer(&models[n], a, b, thresholds[n]);
            let change = threshold_gap(next, thresholds[n]);
            if change > max_change {
                max_change = change;
                worst_agent = n;
            }
            thresholds[n] = next;
            probs[n] = models[n].vote_probs(next);
        }
        if max_change <= opts.tolerance {
            converged = true;
            break;
        }
    }
    let e = team_errors_from_probs(&probs, l);
    Descent {
        thresholds,
        risk: w0 * e.type_i + w1 * e.type_ii,
        sweeps,
        converged,
        worst_agent,
    }
}

/// Person-by-person optimal thresholds for agents with arbitrary models,
/// best of several deterministic multistarts.
pub fn optimal_secret_thresholds(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
) -> Result<SecretSolution> {
    optimal_secret_thresholds_with(prior, costs, models, rule, &SolverOptions::default())
}

pub fn optimal_secret_thresholds_with(
    prior: &Prior,
    costs: &CostModel,
    models: &[LikelihoodModel],
    rule: FusionRule,
    opts: &SolverOptions,
) -> Result<SecretSolution> {
    prior.require_interior()?;
    if models.len() != rule.n() {
        return Err(invalid(format!(
            "{} models given for a team of N = {}",
            models.len(),
            rule.n()
        )));
    }
    for m in models {
        m.validate()?;
    }
    let (w0, w1) = risk_weights(prior, costs);
    let runs = opts.execution.map(&opts.start_offsets, |&offset| {
        let start = seed_thresholds(models, w0, w1, offset);
        coordinate_descent(models, rule.l(), w0, w1, start, opts)
    });
    let summary: Vec<(f64, bool)> = runs.iter().map(|d| (d.risk, d.converged)).collect();
    let Some(best) = pick_best(&summary) else {
        let d = &runs[pick_lowest(&summary)];
        return Err(Error::Solver {
            location: format!("secret thresholds, agent {}", d.worst_agent),
            sweeps: d.sweeps,
            best_risk: d.risk,
            best_thresholds: d.thresholds.clone(),
        });
    };
    let d = &runs[best];
    let probs: Vec<VoteProbs> = models
        .iter()
        .zip(&d.thresholds)
        .map(|(m, &t)| m.vote_probs(t))
        .collect();
    let residuals = (0..models.len())
        .map(|n| {
            let (a, b) = pivot_weights(&probs, n, rule.l(), w0, w1);
            lrt_residual(&models[n], a, b, d.thresholds[n])
        })
        .collect();
    let team_errors = team_errors_from_probs(&probs, rule.l());
    Ok(SecretSolution {
        thresholds: d.thresholds.clone(),
        risk: w0 * team_errors.type_i + w1 * team_errors.type_ii,
        team_errors,
        fixed_point_residuals: residuals,
        sweeps: d.sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::bayes_risk;

    fn g(v: f64) -> LikelihoodModel {
        LikelihoodModel::gaussian(v).unwrap()
    }

    fn p(p0: f64) -> Prior {
        Prior::new(p0).unwrap()
    }

    #[test]
    fn symmetric_single_agent() {
        let s = optimal_identical_threshold(&p(0.5), &CostModel::unit(), &g(1.0), FusionRule::new(1, 1).unwrap())
            .unwrap();
        assert!((s.thresholds[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_majority() {
        let s = optimal_identical_threshold(&p(0.5), &CostModel::unit(), &g(1.0), FusionRule::new(2, 3).unwrap())
            .unwrap();
        assert!((s.thresholds[0] - 0.5).abs() < 1e-12);
        assert!(s.fixed_point_residuals[0] < 1e-8);
    }

    #[test]
    fn four_of_seven_at_quarter_prior() {
        // Frozen from a 40-digit dense-grid + golden-section minimization of
        // the binomial risk (independent of this crate).
        let s = optimal_identical_threshold(&p(0.25), &CostModel::unit(), &g(1.0), FusionRule::new(4, 7).unwrap())
            .unwrap();
        assert!((s.thresholds[0] - 0.270_443_998_133_708_2).abs() < 1e-10);
        assert!((s.risk - 0.111_128_845_548_603_82).abs() < 1e-14);
    }

    #[test]
    fn more_frozen_identical_optima() {
        let cases = [
            (0.3, 2, 3, 0.124_890_557_787_221_41, 0.194_408_500_843_642_88),
            (0.5, 1, 5, 1.581_823_209_666_055, 0.223_364_025_075_433_08),
        ];
        for (p0, l, n, lam, risk) in cases {
            let s = optimal_identical_threshold(&p(p0), &CostModel::unit(), &g(1.0), FusionRule::new(l, n).unwrap())
                .unwrap();
            assert!((s.thresholds[0] - lam).abs() < 1e-10, "{p0} {l}/{n}");
            assert!((s.risk - risk).abs() < 1e-14, "{} vs {risk}", s.risk);
        }
    }

    #[test]
    fn risk_matches_recomputation() {
        let prior = p(0.4);
        let costs = CostModel::new(1.0, 3.0).unwrap();
        let rule = FusionRule::new(2, 4).unwrap();
        let s = optimal_identical_threshold(&prior, &costs, &g(0.8), rule).unwrap();
        let locals = vec![g(0.8).local_error_pair(s.thresholds[0]); 4];
        let team = crate::fusion::team_error_pair(&locals, 2).unwrap();
        assert!((bayes_risk(&prior, &costs, &team) - s.risk).abs() < 1e-10);
    }

    #[test]
    fn single_agent_is_the_bayes_test() {
        let prior = p(0.3);
        let costs = CostModel::new(2.0, 0.5).unwrap();
        let m = g(0.7);
        let s = optimal_secret_thresholds(&prior, &costs, &[m], FusionRule::new(1, 1).unwrap()).unwrap();
        let expected = m.invert_lr(2.0 * 0.3 / (0.5 * 0.7)).unwrap();
        assert!((s.thresholds[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn iid_person_by_person_is_identical() {
        let prior = p(0.25);
        let costs = CostModel::unit();
        for (l, n) in [(1, 3), (2, 3), (4, 7), (2, 5)] {
            let rule = FusionRule::new(l, n).unwrap();
            let ident = optimal_identical_threshold(&prior, &costs, &g(1.0), rule).unwrap();
            let pbp = optimal_secret_thresholds(&prior, &costs, &vec![g(1.0); n], rule).unwrap();
            for t in &pbp.thresholds {
                assert!((t - ident.thresholds[0]).abs() < 1e-6, "{l}/{n}: {t} vs {}", ident.thresholds[0]);
            }
            assert!(pbp.fixed_point_residuals.iter().all(|r| *r < 1e-8));
        }
    }

    #[test]
    fn local_optimality_under_perturbation() {
        let prior = p(0.6);
        let costs = CostModel::new(1.0, 2.0).unwrap();
        let models = [g(0.25), g(1.0), g(2.25)];
        let rule = FusionRule::new(2, 3).unwrap();
        let s = optimal_secret_thresholds(&prior, &costs, &models, rule).unwrap();
        for n in 0..3 {
            for d in [1e-4, -1e-4] {
                let mut t = s.thresholds.clone();
                t[n] += d;
                let e = secret_team_errors(&models, &t, 2);
                assert!(bayes_risk(&prior, &costs, &e) >= s.risk - 1e-10);
            }
        }
    }

    #[test]
    fn rejects_mismatched_team() {
        let r = optimal_secret_thresholds(&p(0.5), &CostModel::unit(), &[g(1.0)], FusionRule::new(1, 2).unwrap());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        let r = optimal_identical_threshold(&p(1.0), &CostModel::unit(), &g(1.0), FusionRule::new(1, 2).unwrap());
        assert!(r.is_err());
    }

    #[test]
    fn exponential_agents_solve() {
        let m = LikelihoodModel::exponential(2.0, 0.5).unwrap();
        let rule = FusionRule::new(2, 3).unwrap();
        let ident = optimal_identical_threshold(&p(0.5), &CostModel::unit(), &m, rule).unwrap();
        let pbp = optimal_secret_thresholds(&p(0.5), &CostModel::unit(), &[m; 3], rule).unwrap();
        assert!(pbp.risk <= ident.risk + 1e-12);
        assert!(ident.fixed_point_residuals[0] < 1e-8);
    }
}
