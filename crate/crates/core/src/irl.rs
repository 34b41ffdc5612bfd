//! Maximum-entropy inverse reinforcement learning over one-hot state features.
//!
//! The learner models demonstrations as paths of `horizon` states through the
//! noise-free grid in which every demonstrated terminal is absorbing: a
//! demonstration that reaches its goal early stays there for the remaining
//! steps. A path's probability is proportional to `exp(Σ_t θ(s_t))`, realised
//! step by step by a time-indexed soft policy, so the gradient of the mean
//! log-likelihood is exactly `absorbed_feature_counts − expected_svf`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::terminal_set;
use crate::gridworld::{Action, Cell, GridSpec, StateIndex, TransitionTable};

/// Per-state reward weights, indexed like [`GridSpec::enumerate_free_states`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub theta: Vec<f64>,
}

impl RewardParams {
    pub fn zeros(n: usize) -> Self {
        Self {
            theta: vec![0.0; n],
        }
    }

    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("reward weights must be finite".into()));
        }
        Ok(Self { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the infinity norm of the gradient drops to this value.
    pub grad_tol: f64,
    /// Path horizon; `None` means twice the number of free states.
    pub horizon: Option<usize>,
}

impl Default for IrlConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 500,
            grad_tol: 1e-4,
            horizon: None,
        }
    }
}

impl IrlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.grad_tol > 0.0 && self.max_iters > 0) {
            return Err(Error::InvalidConfig(
                "IRL learning_rate, grad_tol and max_iters must be positive".into(),
            ));
        }
        if self.horizon == Some(0) {
            return Err(Error::InvalidConfig("IRL horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn horizon_for(&self, n_states: usize) -> usize {
        self.horizon.unwrap_or(2 * n_states)
    }
}

/// A state sequence with the actions the teacher issued. Under slip noise
/// the realized move may be perpendicular to the issued action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub states: Vec<Cell>,
    pub actions: Vec<Action>,
    pub valid: bool,
}

impl Demonstration {
    pub fn new(spec: &GridSpec, states: Vec<Cell>, actions: Vec<Action>) -> Result<Self> {
        let Some(&last) = states.last() else {
            return Err(Error::InvalidDemonstration("no states".into()));
        };
        if actions.len() + 1 != states.len() {
            return Err(Error::InvalidDemonstration(format!(
                "{} states but {} actions",
                states.len(),
                actions.len()
            )));
        }
        for &s in &states {
            if !spec.is_free(s) {
                return Err(Error::InvalidCell(s));
            }
        }
        for (t, (pair, &a)) in states.windows(2).zip(&actions).enumerate() {
            let (s, next) = (pair[0], pair[1]);
            let reachable = [a, a.left_of(), a.right_of()]
                .into_iter()
                .any(|b| spec.neighbor(s, b) == next);
            if !reachable {
                return Err(Error::InvalidDemonstration(format!(
                    "step {t}: {next} is not reachable from {s} with {a:?}"
                )));
            }
        }
        Ok(Self {
            valid: spec.is_goal(last),
            states,
            actions,
        })
    }

    pub fn start(&self) -> Cell {
        self.states[0]
    }

    pub fn end(&self) -> Cell {
        *self.states.last().expect("demonstrations are nonempty")
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

fn valid_demos(demos: &[Demonstration]) -> Result<Vec<&Demonstration>> {
    let valid: Vec<_> = demos.iter().filter(|d| d.valid).collect();
    if valid.is_empty() {
        return Err(Error::NoValidDemonstrations);
    }
    Ok(valid)
}

/// Mean per-demonstration state-visit counts.
pub fn empirical_feature_counts(demos: &[Demonstration], index: &StateIndex) -> Result<Vec<f64>> {
    let demos = valid_demos(demos)?;
    let mut counts = vec![0.0; index.len()];
    for d in &demos {
        for &s in &d.states {
            counts[index.require(s)?] += 1.0;
        }
    }
    let n = demos.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    Ok(counts)
}

/// Mean visit counts with each demonstration held at its final state until it
/// spans `horizon` states. This is the empirical side of the gradient.
pub fn absorbed_feature_counts(
    demos: &[Demonstration],
    index: &StateIndex,
    horizon: usize,
) -> Result<Vec<f64>> {
    let demos = valid_demos(demos)?;
    let mut counts = vec![0.0; index.len()];
    for d in &demos {
        if d.states.len() > horizon {
            return Err(Error::InvalidDemonstration(format!(
                "{} states exceed horizon {horizon}",
                d.states.len()
            )));
        }
        for &s in &d.states {
            counts[index.require(s)?] += 1.0;
        }
        counts[index.require(d.end())?] += (horizon - d.states.len()) as f64;
    }
    let n = demos.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    Ok(counts)
}

/// Learning-side dynamics: noise-free grid moves with every terminal
/// self-looping under all four actions.
pub fn learner_table(spec: &GridSpec, terminals: &BTreeSet<Cell>) -> Result<TransitionTable> {
    if terminals.is_empty() {
        return Err(Error::EmptyTerminalSet);
    }
    let index = spec.state_index();
    for &t in terminals {
        index.require(t)?;
    }
    Ok(TransitionTable::new(spec, &index, terminals))
}

/// Time-indexed stochastic policy produced by the soft backward pass. Row
/// `t` is the action distribution used to leave the state occupied at step
/// `t`; the last row is never used and is left uniform.
#[derive(Debug, Clone)]
pub struct SoftPolicy {
    table: TransitionTable,
    /// `steps[t][s][a]`
    steps: Vec<Vec<[f64; 4]>>,
}

impl SoftPolicy {
    /// A policy that takes `actions[s]` with certainty at every step.
    pub fn deterministic(table: TransitionTable, actions: &[Action], horizon: usize) -> Self {
        let row: Vec<[f64; 4]> = actions
            .iter()
            .map(|a| {
                let mut p = [0.0; 4];
                p[a.index()] = 1.0;
                p
            })
            .collect();
        Self {
            table,
            steps: vec![row; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, t: usize) -> &[[f64; 4]] {
        &self.steps[t]
    }

    /// The action distribution at the first step of the horizon.
    pub fn first_step(&self) -> &[[f64; 4]] {
        &self.steps[0]
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }
}

fn log_sum_exp(xs: &[f64; 4]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Soft value recursion over paths of `horizon` states.
pub fn soft_policy(
    theta: &RewardParams,
    spec: &GridSpec,
    terminals: &BTreeSet<Cell>,
    horizon: usize,
) -> Result<SoftPolicy> {
    soft_policy_on(theta, learner_table(spec, terminals)?, horizon)
}

pub fn soft_policy_on(
    theta: &RewardParams,
    table: TransitionTable,
    horizon: usize,
) -> Result<SoftPolicy> {
    let n = table.len();
    if theta.len() != n {
        return Err(Error::InvalidConfig(format!(
            "theta has {} entries for {n} states",
            theta.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    let mut steps = vec![vec![[0.25; 4]; n]; horizon];
    // value[s]: log-sum over path suffixes of occupying s at step t + 1
    let mut value = theta.theta.clone();
    let mut current = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for t in (0..horizon - 1).rev() {
        // exponentiate once per step relative to the largest value; states
        // whose successors sit far below it fall back to an exact log-sum-exp
        let top = value.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (w, v) in weight.iter_mut().zip(&value) {
            *w = (v - top).exp();
        }
        for s in 0..n {
            let succ = table.successors(s);
            let w = succ.map(|s2| weight[s2]);
            let row = &mut steps[t][s];
            if w.iter().all(|&x| x > 1e-200) {
                let z: f64 = w.iter().sum();
                current[s] = theta.theta[s] + top + z.ln();
                for a in 0..4 {
                    row[a] = w[a] / z;
                }
            } else {
                let q = succ.map(|s2| value[s2]);
                let v = log_sum_exp(&q);
                current[s] = theta.theta[s] + v;
                for a in 0..4 {
                    row[a] = (q[a] - v).exp();
                }
            }
        }
        std::mem::swap(&mut value, &mut current);
    }
    Ok(SoftPolicy { table, steps })
}

/// Expected state-visitation counts over `horizon` steps starting from `p0`.
pub fn expected_svf(policy: &SoftPolicy, p0: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let n = policy.table.len();
    if p0.len() != n {
        return Err(Error::InvalidConfig(format!(
            "start distribution has {} entries for {n} states",
            p0.len()
        )));
    }
    let total: f64 = p0.iter().sum();
    if (total - 1.0).abs() > 1e-9 || p0.iter().any(|&p| p < 0.0) {
        return Err(Error::UnnormalizedStart(total));
    }
    if horizon > policy.horizon() {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} exceeds the policy horizon {}",
            policy.horizon()
        )));
    }
    let mut occupancy = p0.to_vec();
    let mut visits = vec![0.0; n];
    for t in 0..horizon {
        for (v, &d) in visits.iter_mut().zip(&occupancy) {
            *v += d;
        }
        if t + 1 == horizon {
            break;
        }
        let mut next = vec![0.0; n];
        let probs = policy.step(t);
        for s in 0..n {
            let d = occupancy[s];
            if d == 0.0 {
                continue;
            }
            for (a, &s2) in policy.table.successors(s).iter().enumerate() {
                next[s2] += d * probs[s][a];
            }
        }
        occupancy = next;
    }
    Ok(visits)
}

/// Everything the objective needs, resolved once per demonstration set.
struct Problem<'d> {
    demos: Vec<&'d Demonstration>,
    index: StateIndex,
    table: TransitionTable,
    horizon: usize,
    empirical: Vec<f64>,
    p0: Vec<f64>,
}

impl<'d> Problem<'d> {
    fn new(demos: &'d [Demonstration], spec: &GridSpec, horizon: usize) -> Result<Self> {
        let terminals = terminal_set(demos)?.cells;
        let table = learner_table(spec, &terminals)?;
        let index = spec.state_index();
        let valid = valid_demos(demos)?;
        // a demonstration must fit inside the horizon to have a likelihood
        let longest = valid.iter().map(|d| d.states.len()).max().unwrap_or(1);
        let horizon = horizon.max(longest);
        let empirical = absorbed_feature_counts(demos, &index, horizon)?;
        let mut starts = vec![0usize; index.len()];
        for d in &valid {
            starts[index.require(d.start())?] += 1;
        }
        let p0 = starts
            .iter()
            .map(|&c| c as f64 / valid.len() as f64)
            .collect();
        Ok(Self {
            demos: valid,
            index,
            table,
            horizon,
            empirical,
            p0,
        })
    }

    fn policy(&self, theta: &RewardParams) -> Result<SoftPolicy> {
        soft_policy_on(theta, self.table.clone(), self.horizon)
    }

    fn gradient_under(&self, policy: &SoftPolicy) -> Result<Vec<f64>> {
        let svf = expected_svf(policy, &self.p0, self.horizon)?;
        Ok(self
            .empirical
            .iter()
            .zip(&svf)
            .map(|(e, d)| e - d)
            .collect())
    }

    /// Summed log-likelihood of the demonstrations' state sequences.
    fn log_likelihood_under(&self, policy: &SoftPolicy) -> Result<f64> {
        let mut total = 0.0;
        for d in &self.demos {
            for (t, pair) in d.states.windows(2).enumerate() {
                let s = self.index.require(pair[0])?;
                let next = self.index.require(pair[1])?;
                let p: f64 = self
                    .table
                    .successors(s)
                    .iter()
                    .zip(policy.step(t)[s])
                    .filter(|(&s2, _)| s2 == next)
                    .map(|(_, p)| p)
                    .sum();
                total += p.ln();
            }
        }
        Ok(total)
    }
}

/// Gradient of the mean demonstration log-likelihood with respect to theta,
/// i.e. `absorbed_feature_counts − expected_svf`.
pub fn gradient(
    theta: &RewardParams,
    demos: &[Demonstration],
    spec: &GridSpec,
    horizon: usize,
) -> Result<Vec<f64>> {
    let problem = Problem::new(demos, spec, horizon)?;
    problem.gradient_under(&problem.policy(theta)?)
}

/// Sum over valid demonstrations of the log-probability of the observed
/// state sequence. A transition explained by several actions (e.g. bumping a
/// wall) accumulates the probability of each.
pub fn log_likelihood(
    theta: &RewardParams,
    demos: &[Demonstration],
    spec: &GridSpec,
    horizon: usize,
) -> Result<f64> {
    let problem = Problem::new(demos, spec, horizon)?;
    problem.log_likelihood_under(&problem.policy(theta)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub reward: RewardParams,
    pub iterations: usize,
    /// Infinity norm of the gradient at the returned weights.
    pub residual: f64,
}

/// One accepted iterate of [`fit_with`].
#[derive(Debug, Clone, Copy)]
pub struct FitStep<'a> {
    pub theta: &'a RewardParams,
    pub gradient: &'a [f64],
    /// Mean log-likelihood of the demonstrations at `theta`.
    pub mean_log_likelihood: f64,
}

/// Gradient ascent from zero weights.
pub fn fit(demos: &[Demonstration], spec: &GridSpec, cfg: &IrlConfig) -> Result<FitOutcome> {
    fit_with(demos, spec, cfg, |_| {})
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

/// [`fit`] with a callback receiving every iterate before it is updated.
///
/// Each step tries twice the previously accepted step size, capped at
/// `learning_rate`, and halves it until the mean log-likelihood rises by at
/// least `1e-4 · step · ‖g‖²`. Long horizons make the objective's curvature
/// grow with the square of the horizon, which is what the halving absorbs.
pub fn fit_with(
    demos: &[Demonstration],
    spec: &GridSpec,
    cfg: &IrlConfig,
    mut observe: impl FnMut(FitStep<'_>),
) -> Result<FitOutcome> {
    cfg.validate()?;
    let n = spec.state_index().len();
    let problem = Problem::new(demos, spec, cfg.horizon_for(n))?;
    let scale = 1.0 / problem.demos.len() as f64;
    let mut theta = RewardParams::zeros(n);
    let mut policy = problem.policy(&theta)?;
    let mut ll = problem.log_likelihood_under(&policy)? * scale;
    let mut iterations = 0;
    let mut last_step = cfg.learning_rate;
    loop {
        let grad = problem.gradient_under(&policy)?;
        let residual = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        observe(FitStep {
            theta: &theta,
            gradient: &grad,
            mean_log_likelihood: ll,
        });
        if residual <= cfg.grad_tol || iterations == cfg.max_iters {
            return Ok(FitOutcome {
                reward: theta,
                iterations,
                residual,
            });
        }
        let sq_norm: f64 = grad.iter().map(|g| g * g).sum();
        let mut step = (2.0 * last_step).min(cfg.learning_rate);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = RewardParams {
                theta: theta
                    .theta
                    .iter()
                    .zip(&grad)
                    .map(|(t, g)| t + step * g)
                    .collect(),
            };
            let trial_policy = problem.policy(&trial)?;
            let trial_ll = problem.log_likelihood_under(&trial_policy)? * scale;
            if trial_ll >= ll + ARMIJO * step * sq_norm {
                accepted = Some((trial, trial_policy, trial_ll));
                last_step = step;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((t, p, l)) => {
                theta = t;
                policy = p;
                ll = l;
            }
            // no ascent direction left at float precision
            None => {
                return Ok(FitOutcome {
                    reward: theta,
                    iterations,
                    residual,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(len: usize, goal_col: usize, other_col: usize) -> GridSpec {
        GridSpec::new(len, 1, Cell::new(0, goal_col), Cell::new(0, other_col)).unwrap()
    }

    fn demo(spec: &GridSpec, cols: &[usize]) -> Demonstration {
        let states: Vec<Cell> = cols.iter().map(|&c| Cell::new(0, c)).collect();
        let actions = states
            .windows(2)
            .map(|w| {
                if w[1].col > w[0].col {
                    Action::Right
                } else if w[1].col < w[0].col {
                    Action::Left
                } else {
                    Action::Up
                }
            })
            .collect();
        Demonstration::new(spec, states, actions).unwrap()
    }

    #[test]
    fn single_path_counts() {
        let g = chain(3, 1, 2);
        let idx = g.state_index();
        let c = empirical_feature_counts(&[demo(&g, &[0, 1])], &idx).unwrap();
        assert_eq!(c, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn identical_demos_average() {
        let g = chain(3, 1, 2);
        let idx = g.state_index();
        let one = empirical_feature_counts(&[demo(&g, &[0, 1])], &idx).unwrap();
        let two = empirical_feature_counts(&[demo(&g, &[0, 1]), demo(&g, &[0, 1])], &idx).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn branching_demos_average() {
        // A=(0,1), B=(0,0), C=(0,2); both B and C are goals.
        let g = chain(3, 0, 2);
        let idx = g.state_index();
        let c = empirical_feature_counts(&[demo(&g, &[1, 0]), demo(&g, &[1, 2])], &idx).unwrap();
        assert_eq!(c, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn empty_demo_list_is_an_error() {
        let g = chain(3, 0, 2);
        assert!(matches!(
            empirical_feature_counts(&[], &g.state_index()),
            Err(Error::NoValidDemonstrations)
        ));
    }

    #[test]
    fn demonstration_validation() {
        let g = chain(3, 2, 0);
        let bad_len = Demonstration::new(&g, vec![Cell::new(0, 1)], vec![Action::Up]);
        assert!(bad_len.is_err());
        let jump = Demonstration::new(
            &g,
            vec![Cell::new(0, 0), Cell::new(0, 2)],
            vec![Action::Right],
        );
        assert!(jump.is_err());
        // slip: issued Up, moved Right
        let slip = Demonstration::new(&g, vec![Cell::new(0, 1), Cell::new(0, 2)], vec![Action::Up])
            .unwrap();
        assert!(slip.valid);
        let off_goal = Demonstration::new(&g, vec![Cell::new(0, 1)], vec![]).unwrap();
        assert!(!off_goal.valid);
    }

    #[test]
    fn uniform_theta_one_step_is_uniform() {
        let g = GridSpec::new(4, 4, Cell::new(0, 0), Cell::new(3, 3)).unwrap();
        let terminals = BTreeSet::from([Cell::new(0, 0)]);
        let pi = soft_policy(
            &RewardParams::new(vec![0.7; 16]).unwrap(),
            &g,
            &terminals,
            1,
        )
        .unwrap();
        for row in pi.first_step() {
            for p in row {
                assert!((p - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_theta_long_horizon_is_uniform() {
        let g = GridSpec::new(4, 4, Cell::new(0, 0), Cell::new(3, 3)).unwrap();
        let terminals = BTreeSet::from([Cell::new(0, 0)]);
        let pi = soft_policy(&RewardParams::zeros(16), &g, &terminals, 32).unwrap();
        for t in 0..32 {
            for row in pi.step(t) {
                for p in row {
                    assert!((p - 0.25).abs() < 1e-12);
                }
            }
        }
    }

    /// Hand-rolled soft recursion on the 1×3 chain with the right end
    /// absorbing; probability of Right from the left end at step 0.
    fn chain_oracle_right_prob(theta: [f64; 3], horizon: usize) -> f64 {
        // successors per action (Up, Down, Left, Right)
        let succ = [[0, 0, 0, 1], [1, 1, 0, 2], [2, 2, 2, 2]];
        let mut v = theta;
        for _ in 0..horizon - 2 {
            let mut nv = [0.0; 3];
            for s in 0..3 {
                let z: f64 = succ[s].iter().map(|&s2: &usize| v[s2].exp()).sum();
                nv[s] = theta[s] + z.ln();
            }
            v = nv;
        }
        let z: f64 = succ[0].iter().map(|&s2: &usize| v[s2].exp()).sum();
        v[1].exp() / z
    }

    #[test]
    fn chain_prefers_high_reward_end() {
        let g = chain(3, 2, 0);
        let terminals = BTreeSet::from([Cell::new(0, 2)]);
        let theta = RewardParams::new(vec![0.0, 0.0, 10.0]).unwrap();
        let pi = soft_policy(&theta, &g, &terminals, 6).unwrap();
        let p = pi.first_step()[0][Action::Right.index()];
        let oracle = chain_oracle_right_prob([0.0, 0.0, 10.0], 6);
        assert!((p - oracle).abs() < 1e-12, "{p} vs {oracle}");
        assert!(p > 0.99);
    }

    #[test]
    fn empty_terminals_rejected() {
        let g = chain(3, 2, 0);
        assert!(matches!(
            soft_policy(&RewardParams::zeros(3), &g, &BTreeSet::new(), 3),
            Err(Error::EmptyTerminalSet)
        ));
    }

    fn table(g: &GridSpec, absorbing: &[Cell]) -> TransitionTable {
        TransitionTable::new(g, &g.state_index(), &absorbing.iter().copied().collect())
    }

    #[test]
    fn svf_stay_put_is_scaled_start() {
        let g = GridSpec::new(3, 3, Cell::new(0, 0), Cell::new(2, 2)).unwrap();
        // top-row cells stay put when moving up
        let pi = SoftPolicy::deterministic(table(&g, &[]), &[Action::Up; 9], 7);
        let mut p0 = vec![0.0; 9];
        p0[0] = 0.25;
        p0[1] = 0.5;
        p0[2] = 0.25;
        let d = expected_svf(&pi, &p0, 7).unwrap();
        for s in 0..9 {
            assert!((d[s] - 7.0 * p0[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn svf_chain_hand_simulation() {
        let g = chain(3, 2, 0);
        let pi = SoftPolicy::deterministic(table(&g, &[Cell::new(0, 2)]), &[Action::Right; 3], 5);
        let d = expected_svf(&pi, &[1.0, 0.0, 0.0], 5).unwrap();
        assert_eq!(d, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn svf_rejects_unnormalized_start() {
        let g = chain(3, 2, 0);
        let pi = SoftPolicy::deterministic(table(&g, &[]), &[Action::Right; 3], 5);
        assert!(matches!(
            expected_svf(&pi, &[0.5, 0.0, 0.0], 5),
            Err(Error::UnnormalizedStart(_))
        ));
    }

    #[test]
    fn absorbed_counts_hold_the_goal() {
        let g = chain(3, 2, 0);
        let c = absorbed_feature_counts(&[demo(&g, &[0, 1, 2])], &g.state_index(), 5).unwrap();
        assert_eq!(c, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn soft_rows_sum_to_one() {
        let g = GridSpec::new(4, 4, Cell::new(0, 3), Cell::new(3, 0)).unwrap();
        let theta: Vec<f64> = (0..16)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.7)
            .collect();
        let pi = soft_policy(
            &RewardParams::new(theta).unwrap(),
            &g,
            &BTreeSet::from([Cell::new(0, 3)]),
            32,
        )
        .unwrap();
        for t in 0..32 {
            for row in pi.step(t) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_step_uniform_log_likelihood() {
        let g = GridSpec::new(4, 4, Cell::new(1, 2), Cell::new(3, 3)).unwrap();
        let d = Demonstration::new(
            &g,
            vec![Cell::new(1, 1), Cell::new(1, 2)],
            vec![Action::Right],
        )
        .unwrap();
        let ll = log_likelihood(&RewardParams::zeros(16), &[d], &g, 32).unwrap();
        assert!((ll - 0.25_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_state_chain_rewards_destination() {
        let g = GridSpec::new(2, 1, Cell::new(0, 1), Cell::new(0, 0)).unwrap();
        let demos = vec![demo(&g, &[0, 1]); 3];
        // Only the B-terminal demos are valid; A is the other goal but unreached.
        let fit = fit(&demos, &g, &IrlConfig::default()).unwrap();
        assert!(
            fit.reward.theta[1] > fit.reward.theta[0],
            "{:?}",
            fit.reward
        );
    }

    #[test]
    fn fit_residual_within_stopping_rule() {
        let g = chain(4, 3, 0);
        let demos = vec![demo(&g, &[1, 2, 3]), demo(&g, &[2, 3])];
        let cfg = IrlConfig {
            max_iters: 50_000,
            grad_tol: 1e-4,
            ..IrlConfig::default()
        };
        let out = fit(&demos, &g, &cfg).unwrap();
        let grad = gradient(&out.reward, &demos, &g, cfg.horizon_for(4)).unwrap();
        let norm = grad.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(norm <= 10.0 * cfg.grad_tol, "residual {norm}");
    }

    #[test]
    fn log_likelihood_shift_invariant() {
        let g = GridSpec::new(4, 4, Cell::new(0, 3), Cell::new(3, 0)).unwrap();
        let d = Demonstration::new(
            &g,
            vec![
                Cell::new(1, 1),
                Cell::new(1, 2),
                Cell::new(0, 2),
                Cell::new(0, 3),
            ],
            vec![Action::Right, Action::Up, Action::Right],
        )
        .unwrap();
        let theta: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let shifted: Vec<f64> = theta.iter().map(|t| t + 4.5).collect();
        let a = log_likelihood(
            &RewardParams::new(theta).unwrap(),
            std::slice::from_ref(&d),
            &g,
            32,
        )
        .unwrap();
        let b = log_likelihood(&RewardParams::new(shifted).unwrap(), &[d], &g, 32).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn two_state_fit_matches_grid_search() {
        // Only the destination is terminal; the likelihood depends on θ1 − θ0
        // alone and increases with it, so the fit must move that way.
        let g = GridSpec::new(2, 1, Cell::new(0, 1), Cell::new(0, 0)).unwrap();
        let demos = vec![demo(&g, &[0, 1])];
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in -40..=40 {
            let gap = i as f64 * 0.25;
            let ll =
                log_likelihood(&RewardParams::new(vec![0.0, gap]).unwrap(), &demos, &g, 4).unwrap();
            if ll > best.0 {
                best = (ll, gap);
            }
        }
        assert_eq!(best.1, 10.0);
        let out = fit(&demos, &g, &IrlConfig::default()).unwrap();
        let at_fit = log_likelihood(&out.reward, &demos, &g, 4).unwrap();
        let at_zero = log_likelihood(&RewardParams::zeros(2), &demos, &g, 4).unwrap();
        assert!(at_fit > at_zero);
    }

    #[test]
    fn fit_is_monotone_in_likelihood() {
        let g = GridSpec::new(4, 4, Cell::new(0, 3), Cell::new(3, 0)).unwrap();
        let demos = vec![
            demo_cells(&g, &[(2, 1), (1, 1), (1, 2), (0, 2), (0, 3)]),
            demo_cells(&g, &[(3, 2), (3, 1), (3, 0)]),
        ];
        let mut last = f64::NEG_INFINITY;
        fit_with(&demos, &g, &IrlConfig::default(), |step| {
            assert!(step.mean_log_likelihood >= last);
            last = step.mean_log_likelihood;
        })
        .unwrap();
    }

    fn demo_cells(g: &GridSpec, cells: &[(usize, usize)]) -> Demonstration {
        let states: Vec<Cell> = cells.iter().map(|&(r, c)| Cell::new(r, c)).collect();
        let actions = states
            .windows(2)
            .map(|w| {
                *Action::ALL
                    .iter()
                    .find(|&&a| g.neighbor(w[0], a) == w[1])
                    .unwrap()
            })
            .collect();
        Demonstration::new(g, states, actions).unwrap()
    }
}
