use thiserror::Error;

/// Errors produced by the detection, optimization and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal {value} is outside the support of the {model} model")]
    Domain { model: &'static str, value: f64 },

    #[error("likelihood-ratio target {target} is outside the attainable range [{min}, {max})")]
    Range { target: f64, min: f64, max: f64 },

    #[error("observed votes have zero probability under both hypotheses")]
    ImpossibleObservation,

    #[error("fusion state (need {need}, remaining {remaining}) is already terminal")]
    TerminalState { need: i64, remaining: usize },

    #[error("policy has no usable threshold for history {history}")]
    PolicyIncomplete { history: String },

    /// The iterative solver hit its sweep cap. Carries the best iterate seen.
    #[error("solver did not converge at {location} after {sweeps} sweeps (best risk {best_risk})")]
    Solver {
        location: String,
        sweeps: usize,
        best_risk: f64,
        best_thresholds: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
