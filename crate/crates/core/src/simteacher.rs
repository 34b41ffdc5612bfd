//! Scripted teachers for headless experiments.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::ExplanationSample;
use crate::gridworld::{Action, Cell, GridSpec, StateIndex};
use crate::irl::Demonstration;
use crate::metrics::{compute_report, MetricsReport};
use crate::protocol::{
    practice_artifacts, Condition, Event, GoalLabel, LearnedArtifacts, Outcome, Phase, Prediction,
    SessionState, StudySetup, SurveyResponse,
};

/// Breadth-first step counts to `target` over free cells.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    index: StateIndex,
    dist: Vec<Option<usize>>,
}

impl DistanceMap {
    pub fn to(spec: &GridSpec, target: Cell) -> Result<Self> {
        let index = spec.state_index();
        let t = index.require(target)?;
        let mut dist = vec![None; index.len()];
        dist[t] = Some(0);
        let mut queue = VecDeque::from([target]);
        while let Some(c) = queue.pop_front() {
            let d = dist[index.require(c)?].expect("queued cells have a distance");
            for a in Action::ALL {
                let n = spec.neighbor(c, a);
                let ni = index.require(n)?;
                if dist[ni].is_none() {
                    dist[ni] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        Ok(Self { index, dist })
    }

    pub fn distance(&self, from: Cell) -> Option<usize> {
        self.index.index(from).and_then(|i| self.dist[i])
    }

    /// First action in canonical order that moves one step closer.
    pub fn next_action(&self, spec: &GridSpec, from: Cell) -> Option<Action> {
        let d = self.distance(from)?;
        if d == 0 {
            return None;
        }
        Action::ALL
            .into_iter()
            .find(|&a| self.distance(spec.neighbor(from, a)) == Some(d - 1))
    }
}

/// The goal a teacher aims for from `start` under `budget`, with its distance map.
pub fn target_for(spec: &GridSpec, start: Cell, budget: usize) -> Result<(Cell, DistanceMap)> {
    if !spec.is_free(start) {
        return Err(Error::InvalidCell(start));
    }
    let preferred = DistanceMap::to(spec, spec.preferred_goal)?;
    let (target, map) = match preferred.distance(start) {
        Some(d) if d <= budget => (spec.preferred_goal, preferred),
        _ => (
            spec.non_preferred_goal,
            DistanceMap::to(spec, spec.non_preferred_goal)?,
        ),
    };
    if map.distance(start).is_none() {
        return Err(Error::UnreachableGoal(target));
    }
    Ok((target, map))
}

/// Walks to the preferred goal when it is within `budget` steps, otherwise to
/// the non-preferred goal, replanning after every (possibly slipped) move.
/// Gives up, yielding an invalid demonstration, after `4·budget` steps.
pub fn demonstrate<R: Rng + ?Sized>(
    spec: &GridSpec,
    start: Cell,
    budget: usize,
    rng: &mut R,
) -> Result<Demonstration> {
    let (target, map) = target_for(spec, start, budget)?;
    let mut states = vec![start];
    let mut actions = Vec::new();
    let mut s = start;
    while !spec.is_goal(s) && actions.len() < 4 * budget {
        let a = map
            .next_action(spec, s)
            .ok_or(Error::UnreachableGoal(target))?;
        s = spec.step_noisy(s, a, rng)?;
        actions.push(a);
        states.push(s);
    }
    Demonstration::new(spec, states, actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherStrategy {
    RandomStart,
    CoverageStart,
    FeedbackResponsive,
}

pub fn random_start<R: Rng + ?Sized>(spec: &GridSpec, rng: &mut R) -> Cell {
    *spec
        .non_goal_states()
        .choose(rng)
        .expect("a grid has at least one non-goal cell")
}

/// Next start cell for a demonstration.
///
/// `history` lists earlier starts, oldest first. Goal cells are never chosen.
pub fn choose_start<R: Rng + ?Sized>(
    strategy: TeacherStrategy,
    spec: &GridSpec,
    history: &[Cell],
    last_sample: Option<&ExplanationSample>,
    rng: &mut R,
) -> Cell {
    match strategy {
        TeacherStrategy::RandomStart => random_start(spec, rng),
        TeacherStrategy::CoverageStart => {
            // least recently used, never-used first, canonical order on ties
            let last_use = |c: Cell| history.iter().rposition(|&h| h == c);
            spec.non_goal_states()
                .into_iter()
                .min_by_key(|&c| last_use(c).map_or(0, |i| i + 1))
                .expect("a grid has at least one non-goal cell")
        }
        TeacherStrategy::FeedbackResponsive => {
            let failures: Vec<Cell> = last_sample
                .map(|s| {
                    s.trajectories
                        .iter()
                        .filter(|t| !t.is_success() && !spec.is_goal(t.start))
                        .map(|t| t.start)
                        .collect()
                })
                .unwrap_or_default();
            match failures.choose(rng) {
                Some(&c) => c,
                None => random_start(spec, rng),
            }
        }
    }
}

/// The teacher's own guess at the robot's behaviour: head for whichever goal
/// is closer, the preferred one on ties. It ignores what was demonstrated,
/// so it is right only as often as the robot behaves "intuitively".
pub struct PredictionHeuristic {
    preferred: DistanceMap,
    non_preferred: DistanceMap,
}

impl PredictionHeuristic {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        Ok(Self {
            preferred: DistanceMap::to(spec, spec.preferred_goal)?,
            non_preferred: DistanceMap::to(spec, spec.non_preferred_goal)?,
        })
    }

    fn nearer(&self, probe: Cell) -> (GoalLabel, &DistanceMap) {
        let p = self.preferred.distance(probe).unwrap_or(usize::MAX);
        let n = self.non_preferred.distance(probe).unwrap_or(usize::MAX);
        if p <= n {
            (GoalLabel::Preferred, &self.preferred)
        } else {
            (GoalLabel::NonPreferred, &self.non_preferred)
        }
    }

    pub fn goal(&self, probe: Cell) -> GoalLabel {
        if self.preferred.distance(probe).is_none() && self.non_preferred.distance(probe).is_none()
        {
            return GoalLabel::NoGoal;
        }
        self.nearer(probe).0
    }

    pub fn action(&self, spec: &GridSpec, probe: Cell) -> Action {
        self.nearer(probe)
            .1
            .next_action(spec, probe)
            .unwrap_or(Action::Up)
    }
}

/// A completed simulated session and every event that drove it.
#[derive(Debug, Clone)]
pub struct SimulatedSession {
    pub session: SessionState,
    pub events: Vec<Event>,
    pub report: MetricsReport,
}

/// Runs a whole session with a scripted teacher. Session randomness comes
/// from `setup.session.seed`; the teacher's own choices come from a separate
/// stream of the same seed.
pub fn run_session(setup: &StudySetup, strategy: TeacherStrategy) -> Result<SimulatedSession> {
    run_session_with(setup, strategy, practice_artifacts(setup)?)
}

/// [`run_session`] with precomputed practice artifacts.
pub fn run_session_with(
    setup: &StudySetup,
    strategy: TeacherStrategy,
    practice: LearnedArtifacts,
) -> Result<SimulatedSession> {
    let mut session = SessionState::with_practice(setup.clone(), practice)?;
    let spec = &setup.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.session.seed);
    rng.set_stream(10);
    let heuristic = PredictionHeuristic::new(spec)?;
    let mut events = Vec::new();
    let mut starts = Vec::new();
    let mut last_sample: Option<ExplanationSample> = None;
    let mut send = |session: &mut SessionState, event: Event| -> Result<Outcome> {
        let out = session.advance(&event)?;
        events.push(event);
        Ok(out)
    };
    loop {
        match session.phase() {
            Phase::Practice | Phase::Explaining => {
                send(&mut session, Event::ExplanationAck)?;
            }
            Phase::Demonstrating => {
                if session.valid_in_current_set() == setup.session.demos_per_set {
                    if let Outcome::SetLearned { explanations, .. } =
                        send(&mut session, Event::SetComplete)?
                    {
                        if explanations.is_some() {
                            last_sample = explanations;
                        }
                    }
                    continue;
                }
                let start = choose_start(strategy, spec, &starts, last_sample.as_ref(), &mut rng);
                starts.push(start);
                let Outcome::AttemptStarted { budget, .. } =
                    send(&mut session, Event::DemoReset { start })?
                else {
                    unreachable!("reset starts an attempt")
                };
                let (_, map) = target_for(spec, start, budget)?;
                for _ in 0..4 * budget {
                    let Some(at) = session.attempt().map(|a| a.position()) else {
                        break;
                    };
                    let action = map
                        .next_action(spec, at)
                        .ok_or(Error::UnreachableGoal(at))?;
                    send(&mut session, Event::DemoStep { action })?;
                }
                // an attempt still open here is abandoned by the next reset
            }
            Phase::ActionPredicting | Phase::GoalPredicting => {
                let goal = session.phase() == Phase::GoalPredicting;
                for (probe_index, (probe, _)) in session.pending_probes().into_iter().enumerate() {
                    let predicted = if goal {
                        Prediction::Goal(heuristic.goal(probe))
                    } else {
                        Prediction::Action(heuristic.action(spec, probe))
                    };
                    let event = Event::PredictionSubmitted {
                        probe_index,
                        predicted,
                        certainty: rng.random_range(3..=7),
                        elapsed: rng.random_range(2.0..12.0),
                    };
                    send(&mut session, event)?;
                }
            }
            Phase::Survey => {
                let mut q = || rng.random_range(2..=7);
                let survey = SurveyResponse {
                    q1: q(),
                    q2: q(),
                    q3: q(),
                    q4: q(),
                };
                send(&mut session, Event::SurveySubmitted { survey })?;
            }
            Phase::Done => break,
        }
    }
    let report = compute_report(&session, &setup.session)?;
    Ok(SimulatedSession {
        session,
        events,
        report,
    })
}

/// One session per seed `setup.session.seed + i` for `i < n_seeds`, in
/// parallel. Reports come back in seed order.
pub fn run_experiment(
    condition: Condition,
    strategy: TeacherStrategy,
    setup: &StudySetup,
    n_seeds: usize,
) -> Result<Vec<MetricsReport>> {
    if n_seeds == 0 {
        return Err(Error::InvalidConfig("n_seeds must be at least 1".into()));
    }
    let practice = practice_artifacts(setup)?;
    (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let mut setup = setup.clone();
            setup.session.condition = condition;
            setup.session.seed = setup.session.seed.wrapping_add(i);
            run_session_with(&setup, strategy, practice.clone()).map(|s| s.report)
        })
        .collect()
}
