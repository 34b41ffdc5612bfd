//! Discounted value iteration on a learnt state reward.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{Action, Cell, GridSpec, StateIndex, TransitionTable};
use crate::irl::RewardParams;

/// Actions whose backed-up value is within this distance of the best are tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub gamma: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            tol: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma {} outside (0, 1)",
                self.gamma
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_sweeps == 0 {
            return Err(Error::InvalidConfig(
                "planner tol and max_sweeps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Planning dynamics: both goal cells self-loop under every action.
pub fn planning_table(spec: &GridSpec, index: &StateIndex) -> TransitionTable {
    let goals: BTreeSet<Cell> = spec.goals().into_iter().collect();
    TransitionTable::new(spec, index, &goals)
}

/// Iterates `V(s) = θ(s) + γ·max_a V(next(s, a))` until the largest
/// per-state change falls below `cfg.tol`.
pub fn value_iteration(
    theta: &RewardParams,
    spec: &GridSpec,
    cfg: &PlannerConfig,
) -> Result<Vec<f64>> {
    let index = spec.state_index();
    value_iteration_on(theta, &planning_table(spec, &index), cfg)
}

/// Value iteration over an explicit successor table.
pub fn value_iteration_on(
    theta: &RewardParams,
    table: &TransitionTable,
    cfg: &PlannerConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if theta.len() != table.len() {
        return Err(Error::InvalidConfig(format!(
            "theta has {} entries for {} states",
            theta.len(),
            table.len()
        )));
    }
    if theta.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig("reward weights must be finite".into()));
    }
    let mut values = vec![0.0; table.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        let next = bellman_sweep(&values, theta, table, cfg.gamma);
        residual = next
            .iter()
            .zip(&values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        values = next;
        if residual < cfg.tol {
            return Ok(values);
        }
    }
    Err(Error::NotConverged {
        sweeps: cfg.max_sweeps,
        residual,
    })
}

pub(crate) fn bellman_sweep(
    values: &[f64],
    theta: &RewardParams,
    table: &TransitionTable,
    gamma: f64,
) -> Vec<f64> {
    (0..values.len())
        .map(|s| {
            let best = table
                .successors(s)
                .iter()
                .map(|&s2| values[s2])
                .fold(f64::NEG_INFINITY, f64::max);
            theta.theta[s] + gamma * best
        })
        .collect()
}

/// The robot's executable policy and the data it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyArtifacts {
    pub values: Vec<f64>,
    pub greedy: Vec<Action>,
    pub optimal_sets: Vec<Vec<Action>>,
}

impl PolicyArtifacts {
    /// Wraps a hand-written action table; every state gets a singleton optimal set.
    pub fn from_table(greedy: Vec<Action>) -> Self {
        Self {
            values: vec![0.0; greedy.len()],
            optimal_sets: greedy.iter().map(|&a| vec![a]).collect(),
            greedy,
        }
    }
}

pub fn greedy_policy(values: &[f64], spec: &GridSpec) -> PolicyArtifacts {
    greedy_policy_on(values, &planning_table(spec, &spec.state_index()))
}

/// First action in canonical order attaining the best successor value.
pub fn greedy_policy_on(values: &[f64], table: &TransitionTable) -> PolicyArtifacts {
    let mut greedy = Vec::with_capacity(values.len());
    let mut optimal_sets = Vec::with_capacity(values.len());
    for s in 0..values.len() {
        let backed = table.successors(s).map(|s2| values[s2]);
        let best = backed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<Action> = Action::ALL
            .into_iter()
            .filter(|a| backed[a.index()] >= best - TIE_TOLERANCE)
            .collect();
        greedy.push(ties[0]);
        optimal_sets.push(ties);
    }
    PolicyArtifacts {
        values: values.to_vec(),
        greedy,
        optimal_sets,
    }
}

/// Value iteration followed by greedy extraction.
pub fn plan(theta: &RewardParams, spec: &GridSpec, cfg: &PlannerConfig) -> Result<PolicyArtifacts> {
    let values = value_iteration(theta, spec, cfg)?;
    Ok(greedy_policy(&values, spec))
}
