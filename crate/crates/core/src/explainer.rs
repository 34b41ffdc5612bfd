//! Explanatory trajectories: noise-free rollouts of the robot's greedy policy,
//! categorized against the goals the teacher has actually demonstrated, and a
//! ratio-preserving sampler that picks which ones to show.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{Action, Cell, GridSpec, StateIndex, TransitionTable};
use crate::irl::Demonstration;
use crate::planner::{planning_table, PolicyArtifacts};

/// Terminal states of the valid demonstrations seen so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalSet {
    pub cells: BTreeSet<Cell>,
}

impl TerminalSet {
    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }
}

impl FromIterator<Cell> for TerminalSet {
    fn from_iter<I: IntoIterator<Item = Cell>>(iter: I) -> Self {
        Self {
            cells: iter.into_iter().collect(),
        }
    }
}

pub fn terminal_set(demos: &[Demonstration]) -> Result<TerminalSet> {
    let cells: BTreeSet<Cell> = demos.iter().filter(|d| d.valid).map(|d| d.end()).collect();
    if cells.is_empty() {
        return Err(Error::NoValidDemonstrations);
    }
    Ok(TerminalSet { cells })
}

/// Anything that names one action per state index.
pub trait GreedyTable {
    fn greedy_action(&self, state: usize) -> Action;
}

impl GreedyTable for PolicyArtifacts {
    fn greedy_action(&self, state: usize) -> Action {
        self.greedy[state]
    }
}

impl GreedyTable for [Action] {
    fn greedy_action(&self, state: usize) -> Action {
        self[state]
    }
}

impl GreedyTable for Vec<Action> {
    fn greedy_action(&self, state: usize) -> Action {
        self[state]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Success,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureReason {
    Cycle,
    StepCap,
    TerminalNotInTu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanatoryTrajectory {
    pub start: Cell,
    pub states: Vec<Cell>,
    pub actions: Vec<Action>,
    pub terminal: Option<Cell>,
    pub category: Category,
    pub failure_reason: Option<FailureReason>,
}

impl ExplanatoryTrajectory {
    pub fn is_success(&self) -> bool {
        self.category == Category::Success
    }
}

/// Rolls policies out under planning dynamics (goal cells absorbing).
pub struct Explainer<'a> {
    spec: &'a GridSpec,
    index: StateIndex,
    table: TransitionTable,
}

impl<'a> Explainer<'a> {
    pub fn new(spec: &'a GridSpec) -> Self {
        let index = spec.state_index();
        let table = planning_table(spec, &index);
        Self { spec, index, table }
    }

    pub fn spec(&self) -> &GridSpec {
        self.spec
    }

    pub fn step_cap(&self) -> usize {
        self.index.len()
    }

    pub fn rollout<P: GreedyTable + ?Sized>(
        &self,
        policy: &P,
        start: Cell,
        tu: &TerminalSet,
    ) -> Result<ExplanatoryTrajectory> {
        let mut s = self.index.require(start)?;
        let mut visited = vec![false; self.index.len()];
        visited[s] = true;
        let mut states = vec![start];
        let mut actions = Vec::new();
        let (terminal, failure) = loop {
            let a = policy.greedy_action(s);
            let next = self.table.next(s, a);
            if next == s {
                let cell = self.index.cell(s);
                let failure = (!tu.contains(cell)).then_some(FailureReason::TerminalNotInTu);
                break (Some(cell), failure);
            }
            if actions.len() == self.step_cap() {
                break (None, Some(FailureReason::StepCap));
            }
            actions.push(a);
            states.push(self.index.cell(next));
            if visited[next] {
                break (None, Some(FailureReason::Cycle));
            }
            visited[next] = true;
            s = next;
        };
        Ok(ExplanatoryTrajectory {
            start,
            states,
            actions,
            terminal,
            category: if failure.is_none() {
                Category::Success
            } else {
                Category::Failure
            },
            failure_reason: failure,
        })
    }

    /// One rollout per free state, in canonical state order.
    pub fn population<P: GreedyTable + ?Sized>(
        &self,
        policy: &P,
        tu: &TerminalSet,
    ) -> Vec<ExplanatoryTrajectory> {
        self.index
            .cells()
            .iter()
            .map(|&c| {
                self.rollout(policy, c, tu)
                    .expect("free states are valid starts")
            })
            .collect()
    }
}

pub fn rollout<P: GreedyTable + ?Sized>(
    policy: &P,
    spec: &GridSpec,
    start: Cell,
    tu: &TerminalSet,
) -> Result<ExplanatoryTrajectory> {
    Explainer::new(spec).rollout(policy, start, tu)
}

pub fn generate_population<P: GreedyTable + ?Sized>(
    policy: &P,
    spec: &GridSpec,
    tu: &TerminalSet,
) -> Vec<ExplanatoryTrajectory> {
    Explainer::new(spec).population(policy, tu)
}

/// Fraction of the population that is successful.
pub fn performance(pop: &[ExplanatoryTrajectory]) -> Result<f64> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let successes = pop.iter().filter(|t| t.is_success()).count();
    Ok(successes as f64 / pop.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSample {
    pub trajectories: Vec<ExplanatoryTrajectory>,
    pub n_success: usize,
    pub n_failure: usize,
}

/// How many failures and successes a sample of `k` carries, given the
/// population counts. Failures are rounded up.
pub fn sample_counts(successes: usize, failures: usize, k: usize) -> Result<(usize, usize)> {
    let total = successes + failures;
    if total == 0 {
        return Err(Error::EmptyPopulation);
    }
    if k == 0 || k > total {
        return Err(Error::SampleTooLarge {
            k,
            available: total,
        });
    }
    let wanted = (k * failures).div_ceil(total).min(k);
    let mut n_failure = wanted.min(failures);
    if k - n_failure > successes {
        n_failure = k - successes;
    }
    Ok((k - n_failure, n_failure))
}

/// Draws `k` trajectories keeping the population's success/failure ratio.
/// Within each category members are drawn uniformly without replacement; the
/// result is returned in population order.
pub fn sample_explanations<R: Rng + ?Sized>(
    pop: &[ExplanatoryTrajectory],
    k: usize,
    rng: &mut R,
) -> Result<ExplanationSample> {
    let (success_idx, failure_idx): (Vec<usize>, Vec<usize>) =
        (0..pop.len()).partition(|&i| pop[i].is_success());
    let (n_success, n_failure) = sample_counts(success_idx.len(), failure_idx.len(), k)?;
    let mut chosen: Vec<usize> = sample(rng, failure_idx.len(), n_failure)
        .into_iter()
        .map(|i| failure_idx[i])
        .chain(
            sample(rng, success_idx.len(), n_success)
                .into_iter()
                .map(|i| success_idx[i]),
        )
        .collect();
    chosen.sort_unstable();
    Ok(ExplanationSample {
        trajectories: chosen.into_iter().map(|i| pop[i].clone()).collect(),
        n_success,
        n_failure,
    })
}
