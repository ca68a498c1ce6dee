//! Shared pieces of the threshold optimizers.
//!
//! Every optimizer here is person-by-person: one threshold moves while all
//! others stay fixed. With the others fixed the team risk is affine in the
//! moving agent's local error pair, `const + a·P_I + b·P_II`, so the exact
//! coordinate minimizer is a likelihood-ratio test with threshold
//! `LR⁻¹(a/b)` whenever `a, b > 0` and a constant vote otherwise.

use crate::exec::Execution;
use crate::model::LikelihoodModel;

/// Tolerances and caps for the iterative optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// A descent has converged once no threshold moves by more than this in
    /// a full sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Multistart seeds, as offsets added to the log of the single-agent
    /// Bayes likelihood-ratio threshold `c10·p0 / (c01·p1)`.
    pub start_offsets: Vec<f64>,
    /// Grid resolution of the identical-threshold scan.
    pub grid_points: usize,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_sweeps: 10_000,
            start_offsets: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            grid_points: 2001,
            execution: Execution::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Minimizer over `λ` of `a·P_I(λ) + b·P_II(λ)`; `current` is kept when the
/// objective does not depend on `λ`.
pub(crate) fn coordinate_minimizer(model: &LikelihoodModel, a: f64, b: f64, current: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => model.lrt_threshold(a.ln() - b.ln()),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => {
            if a < b {
                f64::NEG_INFINITY
            } else if b < a {
                f64::INFINITY
            } else {
                current
            }
        }
    }
}

/// Residual of the coordinate optimality condition `LR(λ) = a/b`, in log
/// space so it reads as a relative error.
pub(crate) fn lrt_residual(model: &LikelihoodModel, a: f64, b: f64, lambda: f64) -> f64 {
    if !lambda.is_finite() || a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    match model.log_likelihood_ratio(lambda) {
        Ok(llr) => {
            let target = a.ln() - b.ln();
            // A threshold at the support floor always votes 1, which is
            // optimal whenever the target lies below the attainable range.
            if llr > target && model.lrt_threshold(target) == lambda {
                0.0
            } else {
                (llr - target).abs()
            }
        }
        Err(_) => 0.0,
    }
}

/// Per-agent seed thresholds for multistart offset `offset`.
pub(crate) fn seed_thresholds(models: &[LikelihoodModel], w0: f64, w1: f64, offset: f64) -> Vec<f64> {
    let base = w0.ln() - w1.ln();
    models.iter().map(|m| m.lrt_threshold(base + offset)).collect()
}

/// Index of the lowest-risk candidate among the converged ones. Risks within
/// `TIE` of each other count as equal and the earlier start wins.
pub(crate) fn pick_best(candidates: &[(f64, bool)]) -> Option<usize> {
    const TIE: f64 = 1e-15;
    let mut best: Option<usize> = None;
    for (i, &(risk, converged)) in candidates.iter().enumerate() {
        if !converged {
            continue;
        }
        match best {
            Some(j) if risk >= candidates[j].0 - TIE => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Lowest-risk candidate regardless of convergence, for error reporting.
pub(crate) fn pick_lowest(candidates: &[(f64, bool)]) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.0 < candidates[best].0 {
            best = i;
        }
    }
    best
}
