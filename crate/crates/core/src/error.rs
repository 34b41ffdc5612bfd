use thiserror::Error;

use crate::gridworld::Cell;
use crate::protocol::Phase;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cell {0} is not a free state of the grid")]
    InvalidCell(Cell),

    #[error("invalid demonstration: {0}")]
    InvalidDemonstration(String),

    #[error("no valid demonstrations")]
    NoValidDemonstrations,

    #[error("terminal set is empty")]
    EmptyTerminalSet,

    #[error("start distribution sums to {0}, expected 1")]
    UnnormalizedStart(f64),

    #[error("value iteration did not converge in {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("empty trajectory population")]
    EmptyPopulation,

    #[error("requested {k} explanations from a population of {available}")]
    SampleTooLarge { k: usize, available: usize },

    #[error("goal cell {0} cannot be used as a prediction probe")]
    GoalProbe(Cell),

    #[error("target goal {0} is unreachable")]
    UnreachableGoal(Cell),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("event `{event}` is not allowed in phase {phase:?}: {reason}")]
    IllegalEvent {
        event: &'static str,
        phase: Phase,
        reason: String,
    },

    #[error("session is not finished (phase {0:?})")]
    SessionNotDone(Phase),

    #[error("event log integrity failure at sequence {seq}: {reason}")]
    Integrity { seq: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
