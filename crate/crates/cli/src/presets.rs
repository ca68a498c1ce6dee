//! Built-in experiments with self-checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teamvote::partial::optimal_partial_policy_with;
use teamvote::public::{belief_at, belief_only_threshold_with, optimal_public_policy_with};
use teamvote::roc::{best_ordering, log_spaced_weights, reversed_roc, unanimity_check, RocSweep};
use teamvote::secret::{optimal_identical_threshold_with, optimal_secret_thresholds_with};
use teamvote::{
    AgentOrdering, CostModel, FusionRule, History, LikelihoodModel, ObservationGraph, Prior, SolverOptions,
    Strategy, VotingMode,
};

use crate::error::CliError;
use crate::output::Table;
use crate::run::{roc_table, threshold_table};

pub const NAMES: [&str; 6] = ["fig4", "fig6", "fig7", "thm1", "thm3", "cor2"];

pub struct PresetOutput {
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

struct Checks {
    table: Table,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            table: Table::new("checks", &["check", "passed", "detail"]),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, passed: bool, detail: String) {
        if !passed {
            self.failures.push(format!("{name} ({detail})"));
        }
        crate::run::check_row(&mut self.table, name, passed, detail);
    }

    fn finish(self, mut tables: Vec<Table>) -> PresetOutput {
        tables.push(self.table);
        PresetOutput {
            tables,
            failures: self.failures,
        }
    }
}

fn gaussians(vars: &[f64]) -> Vec<LikelihoodModel> {
    vars.iter()
        .map(|&v| LikelihoodModel::gaussian(v).expect("preset variances are positive"))
        .collect()
}

pub fn run_preset(name: &str, opts: &SolverOptions, seed: Option<u64>) -> Result<PresetOutput, CliError> {
    let seed = seed.unwrap_or(1);
    match name {
        "fig4" => fig4(opts),
        "fig6" => fig6(opts),
        "fig7" => fig7(opts),
        "thm1" => thm1(opts, seed),
        "thm3" => thm3(opts, seed),
        "cor2" => cor2(opts, seed),
        other => Err(CliError::Config(format!(
            "unknown preset {other:?}; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

/// 4-of-7, p0 = 0.25, unit variance: full public thresholds against the
/// ones a belief update alone would suggest.
fn fig4(opts: &SolverOptions) -> Result<PresetOutput, CliError> {
    let prior = Prior::new(0.25)?;
    let costs = CostModel::unit();
    let m = LikelihoodModel::gaussian(1.0)?;
    let rule = FusionRule::new(4, 7)?;
    let models = vec![m; 7];
    let first = optimal_identical_threshold_with(&prior, &costs, &m, rule, opts)?.thresholds[0];
    let public = optimal_public_policy_with(&prior, &costs, &models, rule, opts)?;

    let mut table = Table::new(
        "belief_only",
        &["agent", "history", "belief", "belief_only_threshold", "threshold"],
    );
    let (mut full_gap, mut belief_gap) = (0f64, 0f64);
    let mut depth2 = Vec::new();
    for depth in 0..=2 {
        for h in History::all(depth) {
            let b = belief_at(&prior, &models, &public.policy, &h)?;
            let t = belief_only_threshold_with(b, &costs, &m, rule, opts)?;
            let full = public.policy.threshold(&h).expect("shallow histories are active");
            full_gap = full_gap.max((full - first).abs());
            belief_gap = belief_gap.max((t - first).abs());
            if depth == 2 {
                depth2.push(t);
            }
            table.push(vec![depth.into(), h.to_string().into(), b.q0().into(), t.into(), full.into()]);
        }
    }
    depth2.sort_by(f64::total_cmp);
    let distinct = 1 + depth2.windows(2).filter(|w| w[1] - w[0] > 1e-9).count();

    let mut checks = Checks::new();
    checks.record("full thresholds equal the first agent's", full_gap < 1e-6, format!("max gap {full_gap:.3e}"));
    checks.record("belief-only thresholds differ", belief_gap > 1e-3, format!("max gap {belief_gap:.6}"));
    checks.record("three belief-only values at depth 2", distinct == 3, format!("{distinct} distinct"));
    let strategy = Strategy::Public(public);
    Ok(checks.finish(vec![threshold_table("thresholds", &strategy, &AgentOrdering::identity(7)), table]))
}

struct SweepSet {
    secret: RocSweep,
    public: Vec<RocSweep>,
}

fn sweep_set(models: &[LikelihoodModel], rule: FusionRule, orderings: &[Vec<usize>], opts: &SolverOptions) -> Result<SweepSet, CliError> {
    let weights = log_spaced_weights(41, 1e-3, 1e3);
    let n = models.len();
    let secret = reversed_roc(models, rule, &VotingMode::Secret, &AgentOrdering::identity(n), &weights, opts)?;
    let public = orderings
        .iter()
        .map(|o| reversed_roc(models, rule, &VotingMode::Public, &AgentOrdering::new(o.clone())?, &weights, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepSet { secret, public })
}

impl SweepSet {
    fn tables(&self) -> Vec<Table> {
        let mut out = vec![roc_table("roc_secret", &self.secret)];
        for p in &self.public {
            out.push(roc_table(&format!("roc_public_{}", p.ordering), p));
        }
        out
    }

    /// Weight-by-weight comparison; sweeps with skipped weights are
    /// compared on the weights they share.
    fn aligned(&self) -> Vec<(f64, f64, Vec<f64>)> {
        self.secret
            .points
            .iter()
            .filter_map(|s| {
                let risks: Option<Vec<f64>> = self
                    .public
                    .iter()
                    .map(|p| p.points.iter().find(|q| q.weight == s.weight).map(|q| q.risk))
                    .collect();
                risks.map(|r| (s.weight, s.risk, r))
            })
            .collect()
    }

    fn check_dominance(&self, checks: &mut Checks, strict_min: usize) {
        let rows = self.aligned();
        let skipped = self.secret.skipped.len() + self.public.iter().map(|p| p.skipped.len()).sum::<usize>();
        checks.record("all sweep weights solved", skipped == 0, format!("{skipped} skipped"));
        for (k, p) in self.public.iter().enumerate() {
            let weak = rows.iter().filter(|(_, s, r)| r[k] > s + 1e-8).count();
            let strict = rows.iter().filter(|(_, s, r)| r[k] < s - 1e-6).count();
            checks.record(
                &format!("public {} weakly below secret", p.ordering),
                weak == 0,
                format!("{weak} violations over {} weights", rows.len()),
            );
            if strict_min > 0 {
                checks.record(
                    &format!("public {} strictly below secret", p.ordering),
                    strict >= strict_min,
                    format!("{strict} weights with gap > 1e-6"),
                );
            }
        }
    }

    /// Weights at which ordering `k` is beaten by another public ordering.
    fn leader_misses(&self, k: usize) -> Vec<f64> {
        self.aligned()
            .into_iter()
            .filter(|(_, _, r)| r[k] > r.iter().copied().fold(f64::INFINITY, f64::min) + 1e-10)
            .map(|(w, _, _)| w)
            .collect()
    }

    fn leader_table(&self) -> Table {
        let mut t = Table::new("leaders", &["weight", "ordering", "risk"]);
        for (w, _, r) in self.aligned() {
            let (k, best) = r
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
            t.push(vec![w.into(), self.public[k].ordering.to_string().into(), best.into()]);
        }
        t
    }
}

/// σ² = (0.25, 1, 2.25), 2-of-3.
fn fig6(opts: &SolverOptions) -> Result<PresetOutput, CliError> {
    let models = gaussians(&[0.25, 1.0, 2.25]);
    let rule = FusionRule::new(2, 3)?;
    let set = sweep_set(&models, rule, &[vec![0, 1, 2], vec![1, 0, 2], vec![2, 0, 1]], opts)?;
    let mut checks = Checks::new();
    set.check_dominance(&mut checks, 5);
    let misses = set.leader_misses(1);
    checks.record(
        "median agent first is best at every weight",
        misses.is_empty(),
        format!("beaten at {misses:?}"),
    );
    let mut tables = set.tables();
    tables.push(set.leader_table());
    Ok(checks.finish(tables))
}

/// σ² = (0.25, 0.5, 1, 2.25), 2-of-4; each first mover is followed by the
/// median of the other three.
fn fig7(opts: &SolverOptions) -> Result<PresetOutput, CliError> {
    let vars = [0.25, 0.5, 1.0, 2.25];
    let models = gaussians(&vars);
    let rule = FusionRule::new(2, 4)?;
    let orderings = vec![vec![0, 2, 1, 3], vec![1, 2, 0, 3], vec![2, 1, 0, 3], vec![3, 1, 0, 2]];
    let set = sweep_set(&models, rule, &orderings, opts)?;
    let mut checks = Checks::new();
    set.check_dominance(&mut checks, 0);
    let search = best_ordering(&Prior::new(0.5)?, &CostModel::unit(), &models, rule, opts)?;
    checks.record(
        "second-best agent first at p0 = 0.5",
        search.best.as_slice()[0] == 1,
        format!("best ordering {}", search.best),
    );
    // Reported, not enforced: at the smallest weights another first mover
    // wins by a small margin.
    let mut tables = set.tables();
    tables.push(set.leader_table());
    Ok(checks.finish(tables))
}

fn draw_prior_costs(rng: &mut ChaCha8Rng) -> Result<(Prior, CostModel), CliError> {
    let p0 = rng.random_range(0.05..0.95);
    let c01 = rng.random_range(0.1f64.ln()..10f64.ln()).exp();
    Ok((Prior::new(p0)?, CostModel::new(1.0, c01)?))
}

/// Identical unit-variance agents, N = 2..7, every L, random prior and
/// costs: public voting keeps the secret threshold everywhere.
fn thm1(opts: &SolverOptions, seed: u64) -> Result<PresetOutput, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = LikelihoodModel::gaussian(1.0)?;
    let mut table = Table::new(
        "thm1",
        &["n", "l", "p0", "c10", "c01", "secret_threshold", "max_threshold_gap", "secret_risk", "public_risk"],
    );
    let (mut worst_t, mut worst_r) = (0f64, 0f64);
    for n in 2..=7 {
        for l in 1..=n {
            let (prior, costs) = draw_prior_costs(&mut rng)?;
            let rule = FusionRule::new(l, n)?;
            let models = vec![m; n];
            let secret = optimal_secret_thresholds_with(&prior, &costs, &models, rule, opts)?;
            let public = optimal_public_policy_with(&prior, &costs, &models, rule, opts)?;
            let gap = public
                .policy
                .nodes
                .values()
                .filter(|t| t.is_active())
                .map(|t| (t.value() - secret.thresholds[0]).abs())
                .fold(0.0, f64::max);
            worst_t = worst_t.max(gap);
            worst_r = worst_r.max((public.report.risk - secret.risk).abs());
            table.push(vec![
                n.into(),
                l.into(),
                prior.p0().into(),
                costs.c10().into(),
                costs.c01().into(),
                secret.thresholds[0].into(),
                gap.into(),
                secret.risk.into(),
                public.report.risk.into(),
            ]);
        }
    }
    let mut checks = Checks::new();
    checks.record("public thresholds equal secret", worst_t < 1e-6, format!("max gap {worst_t:.3e}"));
    checks.record("public risk equals secret", worst_r < 1e-9, format!("max gap {worst_r:.3e}"));
    Ok(checks.finish(vec![table]))
}

/// Unanimity rules with random heterogeneous variances.
fn thm3(opts: &SolverOptions, seed: u64) -> Result<PresetOutput, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(
        "thm3",
        &["n", "l", "variances", "orderings", "public_secret_gap", "ordering_gap", "position_gap", "passed"],
    );
    let mut checks = Checks::new();
    for n in 2..=4 {
        for l in [1, n] {
            for _ in 0..2 {
                let vars: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..4.0)).collect();
                let (prior, costs) = draw_prior_costs(&mut rng)?;
                let rule = FusionRule::new(l, n)?;
                let r = unanimity_check(&prior, &costs, &gaussians(&vars), rule, opts)?;
                let c = r.checks.expect("unanimity rules are checked");
                let label: Vec<String> = vars.iter().map(|v| format!("{v:.4}")).collect();
                table.push(vec![
                    n.into(),
                    l.into(),
                    label.join(" ").into(),
                    c.orderings_checked.into(),
                    c.public_secret_gap.into(),
                    c.ordering_gap.into(),
                    c.position_gap.max(c.history_gap).into(),
                    c.passed.into(),
                ]);
                checks.record(&format!("{rule} unanimity"), c.passed, format!("variances {}", label.join(" ")));
            }
        }
    }
    Ok(checks.finish(vec![table]))
}

/// Identical agents under partial observation (chain and neighbor graphs).
fn cor2(opts: &SolverOptions, seed: u64) -> Result<PresetOutput, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neighbor: [&[usize]; 5] = [&[], &[0], &[0], &[1, 2], &[2]];
    let mut table = Table::new("cor2", &["n", "l", "graph", "secret_risk", "partial_risk"]);
    let mut worst = 0f64;
    for n in 2..=5 {
        for l in 1..=n {
            let m = LikelihoodModel::gaussian(rng.random_range(0.1..4.0))?;
            let (prior, costs) = draw_prior_costs(&mut rng)?;
            let rule = FusionRule::new(l, n)?;
            let models = vec![m; n];
            let secret = optimal_secret_thresholds_with(&prior, &costs, &models, rule, opts)?;
            let graphs = [
                ("chain", ObservationGraph::chain(n)),
                ("neighbor", ObservationGraph::new(neighbor[..n].iter().map(|s| s.to_vec()).collect())?),
            ];
            for (name, graph) in graphs {
                let p = optimal_partial_policy_with(&prior, &costs, &models, rule, &graph, opts)?;
                worst = worst.max((p.report.risk - secret.risk).abs());
                table.push(vec![n.into(), l.into(), name.into(), secret.risk.into(), p.report.risk.into()]);
            }
        }
    }
    let mut checks = Checks::new();
    checks.record("partial risk equals secret", worst < 1e-8, format!("max gap {worst:.3e}"));
    Ok(checks.finish(vec![table]))
}
