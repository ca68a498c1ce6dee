//! Runs a validated experiment and collects its result tables.

use teamvote::roc::{best_ordering, reversed_roc, RocSweep};
use teamvote::sim::{simulate_team, SimConfig, SimResult};
use teamvote::{solve, AgentOrdering, Execution, RiskReport, SolverOptions, Strategy};

use crate::config::{Experiment, OrderingChoice};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const ROC_COLUMNS: [&str; 6] = ["weight", "pe1", "pe2", "risk", "mode", "ordering"];

pub fn threshold_table(name: &str, strategy: &Strategy, ordering: &AgentOrdering) -> Table {
    let mut t = Table::new(name, &["agent", "history", "threshold"]);
    for row in strategy.threshold_rows(ordering.as_slice()) {
        t.push(vec![row.agent.into(), row.history.into(), row.threshold.into()]);
    }
    t
}

pub fn summary_table(rows: &[(String, &AgentOrdering, &RiskReport, usize)]) -> Table {
    let mut t = Table::new("summary", &["mode", "ordering", "risk", "pe1", "pe2", "sweeps"]);
    for (mode, ordering, r, sweeps) in rows {
        t.push(vec![
            mode.as_str().into(),
            ordering.to_string().into(),
            r.risk.into(),
            r.team_errors.type_i.into(),
            r.team_errors.type_ii.into(),
            (*sweeps).into(),
        ]);
    }
    t
}

/// The Pareto-pruned curve of a sweep.
pub fn roc_table(name: &str, sweep: &RocSweep) -> Table {
    let mut t = Table::new(name, &ROC_COLUMNS);
    for p in sweep.curve().points {
        t.push(vec![
            p.weight.into(),
            p.team_errors.type_i.into(),
            p.team_errors.type_ii.into(),
            p.risk.into(),
            sweep.mode.as_str().into(),
            sweep.ordering.to_string().into(),
        ]);
    }
    t
}

pub fn mc_table(r: &SimResult) -> Table {
    let mut t = Table::new(
        "mc",
        &[
            "trials", "seed", "h0", "h1", "pe1", "pe2", "risk", "se_pe1", "se_pe2", "se_risk", "exact_pe1",
            "exact_pe2", "exact_risk",
        ],
    );
    t.push(vec![
        r.config.trials.into(),
        r.config.seed.into(),
        r.counts.h0.into(),
        r.counts.h1.into(),
        r.team_errors.type_i.into(),
        r.team_errors.type_ii.into(),
        r.risk.into(),
        r.se_type_i.into(),
        r.se_type_ii.into(),
        r.se_risk.into(),
        r.analytic.team_errors.type_i.into(),
        r.analytic.team_errors.type_ii.into(),
        r.analytic.risk.into(),
    ]);
    t
}

fn warn_skipped(sweep: &RocSweep) {
    for (w, why) in &sweep.skipped {
        eprintln!("warning: sweep weight {w} skipped: {why}");
    }
}

pub fn run_experiment(exp: &Experiment, opts: &SolverOptions, seed: Option<u64>) -> Result<Vec<Table>, CliError> {
    let mut tables = Vec::new();
    let (ordering, strategy) = match &exp.ordering {
        OrderingChoice::Fixed(o) => {
            let s = solve(&exp.prior, &exp.costs, &o.arrange(&exp.models), exp.rule, &exp.mode, opts)?;
            (o.clone(), s)
        }
        OrderingChoice::Search => {
            let search = best_ordering(&exp.prior, &exp.costs, &exp.models, exp.rule, opts)?;
            let mut t = Table::new("ranking", &["rank", "ordering", "risk", "equivalent"]);
            for (i, r) in search.ranking.iter().enumerate() {
                t.push(vec![(i + 1).into(), r.ordering.to_string().into(), r.risk.into(), r.equivalent.into()]);
            }
            tables.push(t);
            (search.best.clone(), Strategy::Public(search.solution))
        }
    };
    let report = strategy.report(&exp.prior, &exp.costs);
    tables.insert(0, threshold_table("thresholds", &strategy, &ordering));
    tables.insert(
        0,
        summary_table(&[(exp.mode.name().to_string(), &ordering, &report, strategy.sweeps())]),
    );

    if let Some(weights) = &exp.sweep {
        let sweep = reversed_roc(&exp.models, exp.rule, &exp.mode, &ordering, weights, opts)?;
        warn_skipped(&sweep);
        tables.push(roc_table("roc", &sweep));
    }

    if let Some((trials, config_seed)) = exp.mc {
        let config = SimConfig::new(trials, seed.unwrap_or(config_seed))?;
        let arranged = ordering.arrange(&exp.models);
        let policy = strategy.vote_policy(exp.rule);
        let r = simulate_team(&exp.prior, &exp.costs, &arranged, exp.rule, &policy, &config, opts.execution)?;
        tables.push(mc_table(&r));
    }
    Ok(tables)
}

pub fn execution_for(jobs: Option<usize>) -> Execution {
    match jobs {
        Some(1) => Execution::Sequential,
        _ => Execution::default(),
    }
}

pub fn check_row(t: &mut Table, name: &str, passed: bool, detail: String) {
    t.push(vec![Cell::from(name), passed.into(), detail.into()]);
}
