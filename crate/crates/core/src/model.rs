//! Problem primitives: prior, costs, per-agent likelihood models and the
//! local error probabilities induced by a decision threshold.
//!
//! Every agent quantizes its private signal `y` with a threshold `λ`, voting
//! 1 iff `y ≥ λ`. Both likelihood families have a likelihood ratio that is
//! strictly increasing in `y`, so any likelihood-ratio test is a threshold
//! test of this form and `±∞` thresholds encode the constant votes.

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::SQRT_2;

use crate::error::{invalid, Error, Result};

/// Prior distribution of the binary hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    p0: f64,
}

impl Prior {
    pub fn new(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(invalid(format!("prior p0 = {p0} is not a probability")));
        }
        Ok(Self { p0 })
    }

    /// Probability of `H = 0`.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Probability of `H = 1`.
    pub fn p1(&self) -> f64 {
        1.0 - self.p0
    }

    /// Optimizers reject degenerate priors: with `p0 ∈ {0, 1}` every policy
    /// that never errs on the certain hypothesis is optimal.
    pub(crate) fn require_interior(&self) -> Result<()> {
        if self.p0 <= 0.0 || self.p0 >= 1.0 {
            return Err(invalid(format!(
                "prior p0 = {} must lie strictly inside (0, 1)",
                self.p0
            )));
        }
        Ok(())
    }
}

/// Costs of the two error types; correct decisions cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    c10: f64,
    c01: f64,
}

impl CostModel {
    /// `c10` is the false-alarm cost, `c01` the missed-detection cost.
    pub fn new(c10: f64, c01: f64) -> Result<Self> {
        if !(c10 > 0.0 && c10.is_finite() && c01 > 0.0 && c01.is_finite()) {
            return Err(invalid(format!(
                "costs must be positive and finite, got c10 = {c10}, c01 = {c01}"
            )));
        }
        Ok(Self { c10, c01 })
    }

    pub fn unit() -> Self {
        Self { c10: 1.0, c01: 1.0 }
    }

    pub fn c10(&self) -> f64 {
        self.c10
    }

    pub fn c01(&self) -> f64 {
        self.c01
    }
}

/// Weights `(c10·p0, c01·p1)` multiplying the team Type I and Type II error
/// probabilities in the Bayes risk.
pub(crate) fn risk_weights(prior: &Prior, costs: &CostModel) -> (f64, f64) {
    (costs.c10 * prior.p0(), costs.c01 * prior.p1())
}

/// `L`-out-of-`N` fusion: the team decides 1 iff at least `L` votes are 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FusionRule {
    l: usize,
    n: usize,
}

impl FusionRule {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if n == 0 || l == 0 || l > n {
            return Err(invalid(format!(
                "fusion rule needs 1 <= L <= N, got L = {l}, N = {n}"
            )));
        }
        Ok(Self { l, n })
    }

    pub fn or(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn and(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// OR and AND rules, where one of the team outcomes needs every vote.
    pub fn is_unanimity(&self) -> bool {
        self.l == 1 || self.l == self.n
    }
}

impl std::fmt::Display for FusionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-out-of-{}", self.l, self.n)
    }
}

/// A (Type I, Type II) error probability pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    /// False alarm: decide 1 when `H = 0`.
    pub type_i: f64,
    /// Missed detection: decide 0 when `H = 1`.
    pub type_ii: f64,
}

impl ErrorPair {
    pub fn new(type_i: f64, type_ii: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&type_i) || !(0.0..=1.0).contains(&type_ii) {
            return Err(invalid(format!(
                "error probabilities ({type_i}, {type_ii}) are not both in [0, 1]"
            )));
        }
        Ok(Self { type_i, type_ii })
    }
}

/// Conditional vote probabilities of one agent, indexed `[hypothesis][vote]`.
///
/// Each entry is computed directly rather than as a complement so that
/// probabilities close to one keep their small complement accurately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteProbs {
    pub given: [[f64; 2]; 2],
}

impl VoteProbs {
    pub fn errors(&self) -> ErrorPair {
        ErrorPair {
            type_i: self.given[0][1],
            type_ii: self.given[1][0],
        }
    }

    pub(crate) fn from_errors(e: &ErrorPair) -> Self {
        Self {
            given: [[1.0 - e.type_i, e.type_i], [e.type_ii, 1.0 - e.type_ii]],
        }
    }
}

/// Conditional distribution of an agent's private signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LikelihoodModel {
    /// `Y = H + W` with `W ~ N(0, variance)`.
    Gaussian { variance: f64 },
    /// `Y | H = h ~ Exponential(rate_h)` with `rate1 < rate0`, so larger
    /// signals favour `H = 1`.
    Exponential { rate0: f64, rate1: f64 },
}

impl LikelihoodModel {
    pub fn gaussian(variance: f64) -> Result<Self> {
        let m = LikelihoodModel::Gaussian { variance };
        m.validate()?;
        Ok(m)
    }

    pub fn exponential(rate0: f64, rate1: f64) -> Result<Self> {
        let m = LikelihoodModel::Exponential { rate0, rate1 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LikelihoodModel::Gaussian { variance } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(invalid(format!(
                        "gaussian variance must be positive, got {variance}"
                    )));
                }
            }
            LikelihoodModel::Exponential { rate0, rate1 } => {
                if !(rate0.is_finite() && rate1 > 0.0 && rate1 < rate0) {
                    return Err(invalid(format!(
                        "exponential rates need 0 < rate1 < rate0, got rate0 = {rate0}, rate1 = {rate1}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            LikelihoodModel::Gaussian { .. } => "gaussian",
            LikelihoodModel::Exponential { .. } => "exponential",
        }
    }

    /// Signal-to-noise ratio `1/σ²` for Gaussian agents.
    pub fn snr(&self) -> Option<f64> {
        match *self {
            LikelihoodModel::Gaussian { variance } => Some(1.0 / variance),
            LikelihoodModel::Exponential { .. } => None,
        }
    }

    /// Single-agent minimum Bayes risk at `p0 = 1/2` with unit costs. Lower
    /// means more informative; used to rank agents of any family.
    pub fn information_surrogate(&self) -> f64 {
        let lambda = self.lrt_threshold(0.0);
        let e = self.local_error_pair(lambda);
        0.5 * (e.type_i + e.type_ii)
    }

    fn check_support(&self, y: f64) -> Result<()> {
        let ok = match self {
            LikelihoodModel::Gaussian { .. } => y.is_finite(),
            LikelihoodModel::Exponential { .. } => y.is_finite() && y >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                model: self.name(),
                value: y,
            })
        }
    }

    /// Natural log of `f(y|1)/f(y|0)`.
    pub fn log_likelihood_ratio(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        Ok(match *self {
            LikelihoodModel::Gaussian { variance } => (2.0 * y - 1.0) / (2.0 * variance),
            LikelihoodModel::Exponential { rate0, rate1 } => {
                (rate1 / rate0).ln() + (rate0 - rate1) * y
            }
        })
    }

    pub fn likelihood_ratio(&self, y: f64) -> Result<f64> {
        self.log_likelihood_ratio(y).map(f64::exp)
    }

    /// Infimum of the log likelihood ratio over the support.
    fn log_lr_floor(&self) -> f64 {
        match *self {
            LikelihoodModel::Gaussian { .. } => f64::NEG_INFINITY,
            LikelihoodModel::Exponential { rate0, rate1 } => (rate1 / rate0).ln(),
        }
    }

    /// Signal value at which the log likelihood ratio equals `log_target`.
    pub fn invert_log_lr(&self, log_target: f64) -> Result<f64> {
        let floor = self.log_lr_floor();
        if !log_target.is_finite() || log_target < floor {
            return Err(Error::Range {
                target: log_target.exp(),
                min: floor.exp(),
                max: f64::INFINITY,
            });
        }
        Ok(match *self {
            LikelihoodModel::Gaussian { variance } => variance * log_target + 0.5,
            LikelihoodModel::Exponential { rate0, rate1 } => {
                (log_target - floor) / (rate0 - rate1)
            }
        })
    }

    /// Threshold `λ` with `likelihood_ratio(λ) = target`.
    pub fn invert_lr(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::Range {
                target,
                min: self.log_lr_floor().exp(),
                max: f64::INFINITY,
            });
        }
        self.invert_log_lr(target.ln())
    }

    /// Threshold of the test "vote 1 iff LR(y) ≥ exp(log_target)", extended
    /// to targets the likelihood ratio never reaches.
    pub(crate) fn lrt_threshold(&self, log_target: f64) -> f64 {
        if log_target == f64::INFINITY {
            return f64::INFINITY;
        }
        if log_target <= self.log_lr_floor() || log_target.is_nan() {
            return self.support_floor();
        }
        self.invert_log_lr(log_target)
            .expect("target checked against the attainable range")
    }

    /// Smallest threshold that still makes a difference; thresholds at or
    /// below it always vote 1.
    fn support_floor(&self) -> f64 {
        match self {
            LikelihoodModel::Gaussian { .. } => f64::NEG_INFINITY,
            LikelihoodModel::Exponential { .. } => 0.0,
        }
    }

    /// Finite interval outside of which a threshold is equivalent, to
    /// double precision, to one of the constant votes.
    pub(crate) fn search_bracket(&self) -> (f64, f64) {
        match *self {
            LikelihoodModel::Gaussian { variance } => {
                let sd = variance.sqrt();
                (-12.0 * sd, 1.0 + 12.0 * sd)
            }
            LikelihoodModel::Exponential { rate1, .. } => (0.0, 40.0 / rate1),
        }
    }

    /// Vote probabilities for threshold `lambda` (vote 1 iff `y ≥ lambda`).
    pub fn vote_probs(&self, lambda: f64) -> VoteProbs {
        match *self {
            LikelihoodModel::Gaussian { variance } => {
                let sd = variance.sqrt();
                let z0 = lambda / sd;
                let z1 = (lambda - 1.0) / sd;
                VoteProbs {
                    given: [
                        [normal_cdf(z0), normal_sf(z0)],
                        [normal_cdf(z1), normal_sf(z1)],
                    ],
                }
            }
            LikelihoodModel::Exponential { rate0, rate1 } => {
                if lambda <= 0.0 {
                    VoteProbs {
                        given: [[0.0, 1.0], [0.0, 1.0]],
                    }
                } else {
                    VoteProbs {
                        given: [
                            [-(-rate0 * lambda).exp_m1(), (-rate0 * lambda).exp()],
                            [-(-rate1 * lambda).exp_m1(), (-rate1 * lambda).exp()],
                        ],
                    }
                }
            }
        }
    }

    /// Local (Type I, Type II) errors of the threshold test at `lambda`.
    pub fn local_error_pair(&self, lambda: f64) -> ErrorPair {
        self.vote_probs(lambda).errors()
    }

    /// Inverse-CDF sample of the signal under hypothesis `h` from a uniform
    /// draw `u ∈ (0, 1)`.
    pub fn sample(&self, h: usize, u: f64) -> f64 {
        match *self {
            LikelihoodModel::Gaussian { variance } => h as f64 + variance.sqrt() * normal_quantile(u),
            LikelihoodModel::Exponential { rate0, rate1 } => {
                let rate = if h == 0 { rate0 } else { rate1 };
                -(-u).ln_1p() / rate
            }
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal upper tail `Q(z) = 1 − Φ(z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
pub fn normal_quantile(u: f64) -> f64 {
    let z = -SQRT_2 * erfc_inv(2.0 * u);
    if !z.is_finite() {
        return z;
    }
    // One Newton step against the accurate CDF cleans up the inverse.
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density > 0.0 {
        let err = if u < 0.5 { normal_cdf(z) - u } else { (1.0 - u) - normal_sf(z) };
        z - err / density
    } else {
        z
    }
}

/// Distance between two thresholds where equal infinities count as equal.
pub(crate) fn threshold_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}
