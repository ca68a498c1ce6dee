//! Experiment configuration (TOML, `schema_version = 1`).

use serde::Deserialize;
use std::path::{Path, PathBuf};

use teamvote::roc::log_spaced_weights;
use teamvote::{
    AgentOrdering, CostModel, FusionRule, LikelihoodModel, ObservationGraph, Prior, VotingMode,
};

use crate::error::CliError;
use crate::output::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    /// Prior probability of `H = 0`.
    pub prior: f64,
    #[serde(default)]
    pub costs: Option<RawCosts>,
    pub agents: Vec<LikelihoodModel>,
    pub fusion: RawFusion,
    pub mode: ModeName,
    #[serde(default)]
    pub ordering: Option<RawOrdering>,
    #[serde(default)]
    pub observation_graph: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub sweep: Option<RawSweep>,
    #[serde(default)]
    pub mc: Option<RawMc>,
    #[serde(default)]
    pub output: Option<RawOutput>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCosts {
    pub c10: f64,
    pub c01: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFusion {
    pub l: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Secret,
    Public,
    Partial,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RawOrdering {
    Explicit(Vec<usize>),
    Keyword(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_min")]
    pub min: f64,
    #[serde(default = "default_max")]
    pub max: f64,
}

fn default_count() -> usize {
    41
}
fn default_min() -> f64 {
    1e-3
}
fn default_max() -> f64 {
    1e3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMc {
    pub trials: u64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderingChoice {
    Fixed(AgentOrdering),
    Search,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub prior: Prior,
    pub costs: CostModel,
    pub models: Vec<LikelihoodModel>,
    pub rule: FusionRule,
    pub mode: VotingMode,
    pub ordering: OrderingChoice,
    pub sweep: Option<Vec<f64>>,
    pub mc: Option<(u64, u64)>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

fn field(name: &str, e: teamvote::Error) -> CliError {
    CliError::Config(format!("{name}: {e}"))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(self) -> Result<Experiment, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        let prior = Prior::new(self.prior).map_err(|e| field("prior", e))?;
        let costs = match self.costs {
            Some(c) => CostModel::new(c.c10, c.c01).map_err(|e| field("costs", e))?,
            None => CostModel::unit(),
        };
        for (i, m) in self.agents.iter().enumerate() {
            m.validate().map_err(|e| field(&format!("agents[{i}]"), e))?;
        }
        let rule = FusionRule::new(self.fusion.l, self.fusion.n).map_err(|e| field("fusion", e))?;
        if self.agents.len() != rule.n() {
            return Err(CliError::Config(format!(
                "agents: {} agents listed but fusion.n = {}",
                self.agents.len(),
                rule.n()
            )));
        }
        let n = rule.n();
        let mode = match (self.mode, self.observation_graph) {
            (ModeName::Partial, Some(adj)) => {
                if adj.len() != n {
                    return Err(CliError::Config(format!(
                        "observation_graph: {} rows for {n} agents",
                        adj.len()
                    )));
                }
                VotingMode::Partial(ObservationGraph::new(adj).map_err(|e| field("observation_graph", e))?)
            }
            (ModeName::Partial, None) => {
                return Err(CliError::Config("observation_graph: required when mode = \"partial\"".into()))
            }
            (ModeName::Secret, _) => VotingMode::Secret,
            (ModeName::Public, _) => VotingMode::Public,
        };
        let ordering = match self.ordering {
            None => OrderingChoice::Fixed(AgentOrdering::identity(n)),
            Some(RawOrdering::Explicit(o)) => {
                if o.len() != n {
                    return Err(CliError::Config(format!("ordering: {} entries for {n} agents", o.len())));
                }
                OrderingChoice::Fixed(AgentOrdering::new(o).map_err(|e| field("ordering", e))?)
            }
            Some(RawOrdering::Keyword(k)) if k == "search" => {
                if mode != VotingMode::Public {
                    return Err(CliError::Config("ordering: \"search\" is only available with mode = \"public\"".into()));
                }
                OrderingChoice::Search
            }
            Some(RawOrdering::Keyword(k)) => {
                return Err(CliError::Config(format!(
                    "ordering: expected a list of agent indices or \"search\", found {k:?}"
                )))
            }
        };
        let sweep = match self.sweep {
            None => None,
            Some(s) => {
                let w = match s.weights {
                    Some(w) => w,
                    None => {
                        if !(s.min > 0.0 && s.max >= s.min && s.count >= 1) {
                            return Err(CliError::Config("sweep: need count >= 1 and 0 < min <= max".into()));
                        }
                        log_spaced_weights(s.count, s.min, s.max)
                    }
                };
                if w.is_empty() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(CliError::Config("sweep.weights: need one or more positive reals".into()));
                }
                Some(w)
            }
        };
        let mc = match self.mc {
            None => None,
            Some(m) if m.trials == 0 => return Err(CliError::Config("mc.trials: must be at least 1".into())),
            Some(m) => Some((m.trials, m.seed.unwrap_or(0))),
        };
        let (out_dir, format) = match self.output {
            Some(o) => (o.directory, o.format),
            None => (None, None),
        };
        Ok(Experiment {
            prior,
            costs,
            models: self.agents,
            rule,
            mode,
            ordering,
            sweep,
            mc,
            out_dir,
            format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
prior = 0.5
agents = [{ model = "gaussian", variance = 0.25 }, { model = "gaussian", variance = 1.0 }, { model = "gaussian", variance = 2.25 }]
fusion = { l = 2, n = 3 }
mode = "public"
"#;

    #[test]
    fn minimal_config() {
        let e = RawConfig::parse(BASE).unwrap().validate().unwrap();
        assert_eq!(e.rule, FusionRule::new(2, 3).unwrap());
        assert_eq!(e.ordering, OrderingChoice::Fixed(AgentOrdering::identity(3)));
        assert_eq!(e.costs, CostModel::unit());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = BASE.replace("l = 2", "l = 5");
        let msg = RawConfig::parse(&bad).unwrap().validate().unwrap_err().to_string();
        assert!(msg.contains("fusion"), "{msg}");
        let bad = BASE.replace("mode = \"public\"", "mode = \"partial\"");
        let msg = RawConfig::parse(&bad).unwrap().validate().unwrap_err().to_string();
        assert!(msg.contains("observation_graph"), "{msg}");
        let bad = BASE.replace("variance = 1.0", "varianse = 1.0");
        let msg = RawConfig::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
        let bad = format!("{BASE}ordering = [0, 0, 1]\n");
        assert!(RawConfig::parse(&bad).unwrap().validate().is_err());
        let bad = BASE.replace("schema_version = 1", "schema_version = 2");
        assert!(RawConfig::parse(&bad).unwrap().validate().is_err());
    }

    #[test]
    fn search_and_sweep() {
        let text = format!("{BASE}ordering = \"search\"\n[sweep]\ncount = 5\n");
        let e = RawConfig::parse(&text).unwrap().validate().unwrap();
        assert_eq!(e.ordering, OrderingChoice::Search);
        assert_eq!(e.sweep.unwrap().len(), 5);
        let secret = text.replace("mode = \"public\"", "mode = \"secret\"");
        assert!(RawConfig::parse(&secret).unwrap().validate().is_err());
    }
}
