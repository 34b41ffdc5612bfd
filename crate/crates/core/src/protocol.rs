//! The study session state machine.
//!
//! A session is driven purely by [`Event`]s. All randomness (movement noise,
//! budgets, probes, explanation sampling) comes from per-purpose ChaCha
//! streams seeded from the session seed, so the same configuration and event
//! sequence always reproduce the same session.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::explainer::{
    generate_population, performance, sample_explanations, terminal_set, Explainer,
    ExplanationSample, ExplanatoryTrajectory, TerminalSet,
};
use crate::gridworld::{Action, Cell, GridSpec};
use crate::irl::{fit, Demonstration, IrlConfig, RewardParams};
use crate::planner::{plan, PlannerConfig, PolicyArtifacts};
use crate::simteacher::DistanceMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// Explanatory feedback after every demonstration set.
    Ef,
    /// No feedback until the end of the session.
    Nf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub condition: Condition,
    pub demos_per_set: usize,
    pub k_explanations: usize,
    pub predictions_per_subtask: usize,
    pub performance_threshold: f64,
    pub max_demo_sets: usize,
    /// Inclusive range the budget offset δ is drawn from.
    pub budget_delta_range: [i64; 2],
    /// Discard an attempt as soon as it exhausts its budget off-goal.
    pub strict_budget: bool,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            condition: Condition::Ef,
            demos_per_set: 5,
            k_explanations: 5,
            predictions_per_subtask: 5,
            performance_threshold: 0.95,
            max_demo_sets: 10,
            budget_delta_range: [-3, 3],
            strict_budget: false,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.performance_threshold > 0.0 && self.performance_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "performance_threshold {} outside (0, 1]",
                self.performance_threshold
            )));
        }
        for (name, v) in [
            ("demos_per_set", self.demos_per_set),
            ("k_explanations", self.k_explanations),
            ("predictions_per_subtask", self.predictions_per_subtask),
            ("max_demo_sets", self.max_demo_sets),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.budget_delta_range[0] > self.budget_delta_range[1] {
            return Err(Error::InvalidConfig("budget_delta_range is empty".into()));
        }
        Ok(())
    }
}

/// Everything a session needs besides its events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySetup {
    pub grid: GridSpec,
    pub session: SessionConfig,
    pub irl: IrlConfig,
    pub planner: PlannerConfig,
}

impl StudySetup {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.session.validate()?;
        self.irl.validate()?;
        self.planner.validate()?;
        let probes = self.grid.non_goal_states().len();
        if self.session.predictions_per_subtask > probes {
            return Err(Error::InvalidConfig(format!(
                "{} probes requested from {probes} non-goal cells",
                self.session.predictions_per_subtask
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Practice,
    Demonstrating,
    Explaining,
    ActionPredicting,
    GoalPredicting,
    Survey,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Initial,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictionKind {
    Action,
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalLabel {
    Preferred,
    NonPreferred,
    NoGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Action(Action),
    Goal(GoalLabel),
}

impl Prediction {
    pub fn kind(self) -> PredictionKind {
        match self {
            Prediction::Action(_) => PredictionKind::Action,
            Prediction::Goal(_) => PredictionKind::Goal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub kind: PredictionKind,
    pub probe_state: Cell,
    pub predicted: Prediction,
    pub actual: Prediction,
    pub correct: bool,
    pub certainty: u8,
    /// Seconds.
    pub elapsed: f64,
    pub stage: Stage,
}

/// Post-task questionnaire on a 1–7 scale. `q4` (mental demand) is reverse
/// scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub q1: u8,
    pub q2: u8,
    pub q3: u8,
    pub q4: u8,
}

impl SurveyResponse {
    pub fn validate(&self) -> Result<()> {
        for (i, q) in [self.q1, self.q2, self.q3, self.q4].into_iter().enumerate() {
            if !(1..=7).contains(&q) {
                return Err(Error::InvalidConfig(format!(
                    "survey answer q{} = {q} outside 1..=7",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Inputs that drive a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// Start a new demonstration attempt, discarding any unfinished one.
    DemoReset {
        start: Cell,
    },
    DemoStep {
        action: Action,
    },
    SetComplete,
    ExplanationAck,
    PredictionSubmitted {
        probe_index: usize,
        predicted: Prediction,
        certainty: u8,
        elapsed: f64,
    },
    SurveySubmitted {
        survey: SurveyResponse,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::DemoReset { .. } => "demo_reset",
            Event::DemoStep { .. } => "demo_step",
            Event::SetComplete => "set_complete",
            Event::ExplanationAck => "explanation_ack",
            Event::PredictionSubmitted { .. } => "prediction_submitted",
            Event::SurveySubmitted { .. } => "survey_submitted",
        }
    }
}

/// What an accepted event produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    AttemptStarted {
        start: Cell,
        budget: usize,
        discarded_unfinished: bool,
    },
    Stepped {
        cell: Cell,
        steps: usize,
        budget_remaining: i64,
        /// Set when the attempt ended: true if it reached a goal.
        finished: Option<bool>,
    },
    SetLearned {
        performance: f64,
        digest: String,
        explanations: Option<ExplanationSample>,
    },
    Acknowledged,
    Graded {
        record: PredictionRecord,
    },
    SurveyRecorded,
}

/// A demonstration in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub start: Cell,
    pub budget: usize,
    pub states: Vec<Cell>,
    pub actions: Vec<Action>,
}

impl Attempt {
    pub fn position(&self) -> Cell {
        *self.states.last().expect("attempts hold their start")
    }

    pub fn budget_remaining(&self) -> i64 {
        self.budget as i64 - self.actions.len() as i64
    }
}

/// The outputs of one learn/plan/explain pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedArtifacts {
    pub reward: RewardParams,
    pub policy: PolicyArtifacts,
    pub terminals: TerminalSet,
    pub population: Vec<ExplanatoryTrajectory>,
    pub performance: f64,
    pub fit_iterations: usize,
    pub fit_residual: f64,
}

impl LearnedArtifacts {
    /// Hex SHA-256 of the learned reward, values, greedy table and performance.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&(
            &self.reward.theta,
            &self.policy.values,
            &self.policy.greedy,
            self.performance,
        ))
        .expect("artifacts serialize");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Fit, plan, roll out and score.
pub fn learn(demos: &[Demonstration], setup: &StudySetup) -> Result<LearnedArtifacts> {
    let out = fit(demos, &setup.grid, &setup.irl)?;
    let policy = plan(&out.reward, &setup.grid, &setup.planner)?;
    let terminals = terminal_set(demos)?;
    let population = generate_population(&policy, &setup.grid, &terminals);
    let performance = performance(&population)?;
    Ok(LearnedArtifacts {
        reward: out.reward,
        policy,
        terminals,
        population,
        performance,
        fit_iterations: out.iterations,
        fit_residual: out.residual,
    })
}

/// Noise-free shortest-path demonstrations to the preferred goal from every
/// non-goal cell in the left half of the grid.
pub fn practice_demonstrations(spec: &GridSpec) -> Result<Vec<Demonstration>> {
    let map = DistanceMap::to(spec, spec.preferred_goal)?;
    let mut demos = Vec::new();
    for start in spec.non_goal_states() {
        if start.col >= spec.width.div_ceil(2) || map.distance(start).is_none() {
            continue;
        }
        let mut states = vec![start];
        let mut actions = Vec::new();
        let mut s = start;
        while let Some(a) = map.next_action(spec, s) {
            s = spec.apply_action(s, a)?;
            actions.push(a);
            states.push(s);
        }
        demos.push(Demonstration::new(spec, states, actions)?);
    }
    if demos.is_empty() {
        return Err(Error::UnreachableGoal(spec.preferred_goal));
    }
    Ok(demos)
}

/// The fixed policy shown during practice.
pub fn practice_artifacts(setup: &StudySetup) -> Result<LearnedArtifacts> {
    learn(&practice_demonstrations(&setup.grid)?, setup)
}

/// `max(manhattan(start, preferred) + δ, manhattan(start, nearest goal))`
/// with δ uniform over `delta_range`.
pub fn action_budget<R: Rng + ?Sized>(
    spec: &GridSpec,
    start: Cell,
    delta_range: [i64; 2],
    rng: &mut R,
) -> Result<usize> {
    if !spec.is_free(start) {
        return Err(Error::InvalidCell(start));
    }
    let delta = rng.random_range(delta_range[0]..=delta_range[1]);
    Ok(budget_for(spec, start, delta))
}

pub fn budget_for(spec: &GridSpec, start: Cell, delta: i64) -> usize {
    let to_preferred = start.manhattan(spec.preferred_goal) as i64;
    let nearest = spec
        .goals()
        .iter()
        .map(|&g| start.manhattan(g))
        .min()
        .unwrap_or(0) as i64;
    (to_preferred + delta).max(nearest).max(1) as usize
}

/// Correct iff `predicted` is among the tied optimal actions at `probe`.
/// Returns the correctness flag and the greedy action.
pub fn grade_action_prediction(
    policy: &PolicyArtifacts,
    spec: &GridSpec,
    probe: Cell,
    predicted: Action,
) -> Result<(bool, Action)> {
    if spec.is_goal(probe) {
        return Err(Error::GoalProbe(probe));
    }
    let s = spec.state_index().require(probe)?;
    Ok((
        policy.optimal_sets[s].contains(&predicted),
        policy.greedy[s],
    ))
}

/// Where the noise-free rollout from `probe` ends.
pub fn goal_label(
    policy: &PolicyArtifacts,
    spec: &GridSpec,
    tu: &TerminalSet,
    probe: Cell,
) -> Result<GoalLabel> {
    let traj = Explainer::new(spec).rollout(policy, probe, tu)?;
    Ok(match traj.terminal {
        Some(t) if t == spec.preferred_goal => GoalLabel::Preferred,
        Some(t) if t == spec.non_preferred_goal => GoalLabel::NonPreferred,
        _ => GoalLabel::NoGoal,
    })
}

pub fn grade_goal_prediction(
    policy: &PolicyArtifacts,
    spec: &GridSpec,
    tu: &TerminalSet,
    probe: Cell,
    predicted: GoalLabel,
) -> Result<(bool, GoalLabel)> {
    let actual = goal_label(policy, spec, tu, probe)?;
    Ok((predicted == actual, actual))
}

/// `n` distinct non-goal cells, uniformly without replacement.
pub fn sample_probes<R: Rng + ?Sized>(spec: &GridSpec, n: usize, rng: &mut R) -> Result<Vec<Cell>> {
    let pool = spec.non_goal_states();
    if n > pool.len() {
        return Err(Error::SampleTooLarge {
            k: n,
            available: pool.len(),
        });
    }
    Ok(sample(rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Step {
    Demonstrate,
    Explain,
    Predict(PredictionKind, Stage),
    Survey,
}

#[derive(Debug, Clone)]
struct Streams {
    noise: ChaCha8Rng,
    budget: ChaCha8Rng,
    probes: ChaCha8Rng,
    explanations: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |n: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n);
            rng
        };
        Self {
            noise: stream(1),
            budget: stream(2),
            probes: stream(3),
            explanations: stream(4),
        }
    }
}

/// One participant's session.
#[derive(Debug, Clone)]
pub struct SessionState {
    setup: StudySetup,
    phase: Phase,
    stage: Option<Stage>,
    upcoming: VecDeque<Step>,
    demo_sets_completed: usize,
    demos: Vec<Demonstration>,
    set_valid: usize,
    discarded_attempts: usize,
    attempt: Option<Attempt>,
    practice: LearnedArtifacts,
    current: Option<LearnedArtifacts>,
    performance_history: Vec<f64>,
    explanations: Option<ExplanationSample>,
    probes: Vec<Cell>,
    answered: Vec<bool>,
    predictions: Vec<PredictionRecord>,
    survey: Option<SurveyResponse>,
    streams: Streams,
}

impl SessionState {
    /// A fresh session in the practice phase, showing explanations of the
    /// fixed practice policy.
    pub fn new(setup: StudySetup) -> Result<Self> {
        setup.validate()?;
        let practice = practice_artifacts(&setup)?;
        Self::with_practice(setup, practice)
    }

    /// Like [`SessionState::new`] with the practice artifacts supplied, so
    /// many sessions over one setup can share a single fit.
    pub fn with_practice(setup: StudySetup, practice: LearnedArtifacts) -> Result<Self> {
        setup.validate()?;
        let mut streams = Streams::new(setup.session.seed);
        let k = setup.session.k_explanations.min(practice.population.len());
        let explanations = sample_explanations(&practice.population, k, &mut streams.explanations)?;
        Ok(Self {
            setup,
            phase: Phase::Practice,
            stage: None,
            upcoming: VecDeque::new(),
            demo_sets_completed: 0,
            demos: Vec::new(),
            set_valid: 0,
            discarded_attempts: 0,
            attempt: None,
            practice,
            current: None,
            performance_history: Vec::new(),
            explanations: Some(explanations),
            probes: Vec::new(),
            answered: Vec::new(),
            predictions: Vec::new(),
            survey: None,
            streams,
        })
    }

    pub fn setup(&self) -> &StudySetup {
        &self.setup
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Stage of the prediction sub-task in progress.
    pub fn stage(&self) -> Option<Stage> {
        self.stage
    }

    pub fn demo_sets_completed(&self) -> usize {
        self.demo_sets_completed
    }

    /// All valid demonstrations so far, including the current partial set.
    pub fn demos(&self) -> &[Demonstration] {
        &self.demos
    }

    pub fn valid_in_current_set(&self) -> usize {
        self.set_valid
    }

    pub fn discarded_attempts(&self) -> usize {
        self.discarded_attempts
    }

    pub fn attempt(&self) -> Option<&Attempt> {
        self.attempt.as_ref()
    }

    pub fn practice_artifacts(&self) -> &LearnedArtifacts {
        &self.practice
    }

    pub fn current_artifacts(&self) -> Option<&LearnedArtifacts> {
        self.current.as_ref()
    }

    pub fn performance_history(&self) -> &[f64] {
        &self.performance_history
    }

    /// Explanations on screen in the practice or explaining phase.
    pub fn explanations(&self) -> Option<&ExplanationSample> {
        match self.phase {
            Phase::Practice | Phase::Explaining => self.explanations.as_ref(),
            _ => None,
        }
    }

    /// Probe cells of the prediction sub-task in progress, with answered flags.
    pub fn pending_probes(&self) -> Vec<(Cell, bool)> {
        self.probes
            .iter()
            .copied()
            .zip(self.answered.iter().copied())
            .collect()
    }

    pub fn predictions(&self) -> &[PredictionRecord] {
        &self.predictions
    }

    pub fn survey(&self) -> Option<SurveyResponse> {
        self.survey
    }

    /// Events accepted in the current phase.
    pub fn allowed_events(&self) -> &'static [&'static str] {
        match self.phase {
            Phase::Practice => &["demo_reset", "demo_step", "explanation_ack"],
            Phase::Demonstrating => &["demo_reset", "demo_step", "set_complete"],
            Phase::Explaining => &["explanation_ack"],
            Phase::ActionPredicting | Phase::GoalPredicting => &["prediction_submitted"],
            Phase::Survey => &["survey_submitted"],
            Phase::Done => &[],
        }
    }

    /// Applies `event`. On error the session is left untouched.
    pub fn advance(&mut self, event: &Event) -> Result<Outcome> {
        let mut next = self.clone();
        let outcome = next.apply(event)?;
        *self = next;
        Ok(outcome)
    }

    fn illegal(&self, event: &Event, reason: impl Into<String>) -> Error {
        Error::IllegalEvent {
            event: event.name(),
            phase: self.phase,
            reason: reason.into(),
        }
    }

    fn apply(&mut self, event: &Event) -> Result<Outcome> {
        if !self.allowed_events().contains(&event.name()) {
            let allowed = self.allowed_events().join(", ");
            return Err(self.illegal(event, format!("allowed: [{allowed}]")));
        }
        match event {
            Event::DemoReset { start } => self.reset(event, *start),
            Event::DemoStep { action } => self.step(event, *action),
            Event::SetComplete => self.complete_set(event),
            Event::ExplanationAck => {
                self.explanations = None;
                if self.phase == Phase::Practice {
                    self.attempt = None;
                    self.phase = Phase::Demonstrating;
                } else {
                    self.next_step()?;
                }
                Ok(Outcome::Acknowledged)
            }
            Event::PredictionSubmitted {
                probe_index,
                predicted,
                certainty,
                elapsed,
            } => self.predict(event, *probe_index, *predicted, *certainty, *elapsed),
            Event::SurveySubmitted { survey } => {
                survey.validate()?;
                self.survey = Some(*survey);
                self.next_step()?;
                Ok(Outcome::SurveyRecorded)
            }
        }
    }

    fn reset(&mut self, event: &Event, start: Cell) -> Result<Outcome> {
        let spec = &self.setup.grid;
        if !spec.is_free(start) {
            return Err(self.illegal(event, format!("start {start} is not a free cell")));
        }
        if spec.is_goal(start) {
            return Err(self.illegal(event, format!("start {start} is a goal")));
        }
        if self.phase == Phase::Demonstrating && self.set_valid == self.setup.session.demos_per_set
        {
            return Err(self.illegal(event, "demonstration set is full"));
        }
        let budget = action_budget(
            spec,
            start,
            self.setup.session.budget_delta_range,
            &mut self.streams.budget,
        )?;
        let discarded_unfinished = self.attempt.is_some();
        if discarded_unfinished && self.phase == Phase::Demonstrating {
            self.discarded_attempts += 1;
        }
        self.attempt = Some(Attempt {
            start,
            budget,
            states: vec![start],
            actions: Vec::new(),
        });
        Ok(Outcome::AttemptStarted {
            start,
            budget,
            discarded_unfinished,
        })
    }

    fn step(&mut self, event: &Event, action: Action) -> Result<Outcome> {
        let Some(attempt) = self.attempt.as_mut() else {
            return Err(self.illegal(event, "no demonstration in progress"));
        };
        let spec = &self.setup.grid;
        let cell = spec.step_noisy(attempt.position(), action, &mut self.streams.noise)?;
        attempt.actions.push(action);
        attempt.states.push(cell);
        let steps = attempt.actions.len();
        let budget_remaining = attempt.budget_remaining();
        let finished = if spec.is_goal(cell) {
            Some(true)
        } else if self.setup.session.strict_budget && budget_remaining <= 0 {
            Some(false)
        } else {
            None
        };
        if let Some(valid) = finished {
            let attempt = self.attempt.take().expect("attempt checked above");
            if self.phase == Phase::Demonstrating {
                if valid {
                    self.demos
                        .push(Demonstration::new(spec, attempt.states, attempt.actions)?);
                    self.set_valid += 1;
                } else {
                    self.discarded_attempts += 1;
                }
            }
        }
        Ok(Outcome::Stepped {
            cell,
            steps,
            budget_remaining,
            finished,
        })
    }

    fn complete_set(&mut self, event: &Event) -> Result<Outcome> {
        let need = self.setup.session.demos_per_set;
        if self.set_valid < need {
            return Err(self.illegal(
                event,
                format!(
                    "{} of {need} valid demonstrations collected",
                    self.set_valid
                ),
            ));
        }
        if self.attempt.take().is_some() {
            self.discarded_attempts += 1;
        }
        let learned = learn(&self.demos, &self.setup)?;
        let performance = learned.performance;
        let digest = learned.digest();
        self.current = Some(learned);
        self.performance_history.push(performance);
        self.demo_sets_completed += 1;
        self.set_valid = 0;

        let cfg = &self.setup.session;
        let ef = cfg.condition == Condition::Ef;
        let terminal = performance > cfg.performance_threshold
            || self.demo_sets_completed == cfg.max_demo_sets;
        let mut plan = VecDeque::new();
        if ef {
            plan.push_back(Step::Explain);
        }
        if self.demo_sets_completed == 1 {
            plan.push_back(Step::Predict(PredictionKind::Action, Stage::Initial));
            plan.push_back(Step::Predict(PredictionKind::Goal, Stage::Initial));
        }
        if terminal {
            plan.push_back(Step::Predict(PredictionKind::Action, Stage::Final));
            plan.push_back(Step::Predict(PredictionKind::Goal, Stage::Final));
            if !ef {
                plan.push_back(Step::Explain);
            }
            plan.push_back(Step::Survey);
        } else {
            plan.push_back(Step::Demonstrate);
        }
        self.upcoming = plan;
        self.next_step()?;
        Ok(Outcome::SetLearned {
            performance,
            digest,
            explanations: self.explanations.clone(),
        })
    }

    fn next_step(&mut self) -> Result<()> {
        self.stage = None;
        self.probes.clear();
        self.answered.clear();
        let Some(step) = self.upcoming.pop_front() else {
            self.phase = Phase::Done;
            return Ok(());
        };
        match step {
            Step::Demonstrate => self.phase = Phase::Demonstrating,
            Step::Explain => {
                let pop = &self
                    .current
                    .as_ref()
                    .expect("explaining follows learning")
                    .population;
                let k = self.setup.session.k_explanations.min(pop.len());
                self.explanations =
                    Some(sample_explanations(pop, k, &mut self.streams.explanations)?);
                self.phase = Phase::Explaining;
            }
            Step::Predict(kind, stage) => {
                self.probes = sample_probes(
                    &self.setup.grid,
                    self.setup.session.predictions_per_subtask,
                    &mut self.streams.probes,
                )?;
                self.answered = vec![false; self.probes.len()];
                self.stage = Some(stage);
                self.phase = match kind {
                    PredictionKind::Action => Phase::ActionPredicting,
                    PredictionKind::Goal => Phase::GoalPredicting,
                };
            }
            Step::Survey => self.phase = Phase::Survey,
        }
        Ok(())
    }

    fn predict(
        &mut self,
        event: &Event,
        probe_index: usize,
        predicted: Prediction,
        certainty: u8,
        elapsed: f64,
    ) -> Result<Outcome> {
        let expected = match self.phase {
            Phase::ActionPredicting => PredictionKind::Action,
            _ => PredictionKind::Goal,
        };
        if predicted.kind() != expected {
            return Err(self.illegal(event, format!("expected a {expected:?} prediction")));
        }
        if !(1..=7).contains(&certainty) {
            return Err(self.illegal(event, format!("certainty {certainty} outside 1..=7")));
        }
        if !(elapsed.is_finite() && elapsed >= 0.0) {
            return Err(self.illegal(event, format!("elapsed {elapsed} is not a duration")));
        }
        let Some(&probe) = self.probes.get(probe_index) else {
            return Err(self.illegal(event, format!("no probe {probe_index}")));
        };
        if self.answered[probe_index] {
            return Err(self.illegal(event, format!("probe {probe_index} already answered")));
        }
        let learned = self.current.as_ref().expect("predictions follow learning");
        let spec = &self.setup.grid;
        let (correct, actual) = match predicted {
            Prediction::Action(a) => {
                let (ok, actual) = grade_action_prediction(&learned.policy, spec, probe, a)?;
                (ok, Prediction::Action(actual))
            }
            Prediction::Goal(g) => {
                let (ok, actual) =
                    grade_goal_prediction(&learned.policy, spec, &learned.terminals, probe, g)?;
                (ok, Prediction::Goal(actual))
            }
        };
        let record = PredictionRecord {
            kind: expected,
            probe_state: probe,
            predicted,
            actual,
            correct,
            certainty,
            elapsed,
            stage: self.stage.expect("prediction phases carry a stage"),
        };
        self.predictions.push(record.clone());
        self.answered[probe_index] = true;
        if self.answered.iter().all(|&a| a) {
            self.next_step()?;
        }
        Ok(Outcome::Graded { record })
    }
}
