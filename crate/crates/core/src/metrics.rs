//! Per-session teaching and prediction metrics, and the Mann-Whitney U test
//! used to compare conditions.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::protocol::{Condition, Phase, PredictionKind, SessionConfig, SessionState, Stage};

/// Number of completed sets after which early-stage efficiency is measured.
pub const EARLY_STAGE_SETS: usize = 4;

/// Flat per-session summary; one row of an experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub condition: Condition,
    pub final_performance: f64,
    pub num_demonstrations: usize,
    pub demo_sets: usize,
    pub teaching_efficiency: f64,
    pub early_stage_efficiency: f64,
    /// The session ended before the early-stage point; the efficiency above is
    /// the final one.
    pub early_stage_truncated: bool,
    pub action_accuracy_initial: usize,
    pub action_accuracy_final: usize,
    pub goal_accuracy_initial: usize,
    pub goal_accuracy_final: usize,
    pub action_certainty_initial: f64,
    pub action_certainty_final: f64,
    pub goal_certainty_initial: f64,
    pub goal_certainty_final: f64,
    /// Summed seconds over all action predictions.
    pub action_time: f64,
    pub goal_time: f64,
    pub survey_q1: u8,
    pub survey_q2: u8,
    pub survey_q3: u8,
    pub survey_q4: u8,
    #[serde(serialize_with = "join_history", deserialize_with = "split_history")]
    pub performance_history: Vec<f64>,
}

fn join_history<S: Serializer>(h: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let parts: Vec<String> = h.iter().map(|p| p.to_string()).collect();
    s.serialize_str(&parts.join(";"))
}

fn split_history<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let s = String::deserialize(d)?;
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|p| p.parse().map_err(serde::de::Error::custom))
        .collect()
}

impl MetricsReport {
    /// Numeric column by CSV name, for comparisons.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "final_performance" => self.final_performance,
            "num_demonstrations" | "demos" => self.num_demonstrations as f64,
            "demo_sets" => self.demo_sets as f64,
            "teaching_efficiency" => self.teaching_efficiency,
            "early_stage_efficiency" => self.early_stage_efficiency,
            "action_accuracy_initial" => self.action_accuracy_initial as f64,
            "action_accuracy_final" => self.action_accuracy_final as f64,
            "goal_accuracy_initial" => self.goal_accuracy_initial as f64,
            "goal_accuracy_final" => self.goal_accuracy_final as f64,
            "action_certainty_initial" => self.action_certainty_initial,
            "action_certainty_final" => self.action_certainty_final,
            "goal_certainty_initial" => self.goal_certainty_initial,
            "goal_certainty_final" => self.goal_certainty_final,
            "action_time" => self.action_time,
            "goal_time" => self.goal_time,
            "survey_q1" => self.survey_q1 as f64,
            "survey_q2" => self.survey_q2 as f64,
            "survey_q3" => self.survey_q3 as f64,
            "survey_q4" => self.survey_q4 as f64,
            _ => return None,
        })
    }
}

pub fn compute_report(session: &SessionState, cfg: &SessionConfig) -> Result<MetricsReport> {
    if session.phase() != Phase::Done {
        return Err(Error::SessionNotDone(session.phase()));
    }
    let history = session.performance_history();
    let final_performance = *history
        .last()
        .ok_or(Error::SessionNotDone(session.phase()))?;
    let demo_sets = session.demo_sets_completed();
    let num_demonstrations = demo_sets * cfg.demos_per_set;
    let teaching_efficiency = final_performance / num_demonstrations as f64;
    let early_stage_truncated = demo_sets < EARLY_STAGE_SETS;
    let early_stage_efficiency = if early_stage_truncated {
        teaching_efficiency
    } else {
        history[EARLY_STAGE_SETS - 1] / (EARLY_STAGE_SETS * cfg.demos_per_set) as f64
    };

    let select = |kind: PredictionKind, stage: Stage| {
        session
            .predictions()
            .iter()
            .filter(move |r| r.kind == kind && r.stage == stage)
    };
    let accuracy = |kind, stage| select(kind, stage).filter(|r| r.correct).count();
    let certainty = |kind, stage| {
        let (sum, n) =
            select(kind, stage).fold((0.0, 0usize), |(s, n), r| (s + r.certainty as f64, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    let time = |kind| {
        session
            .predictions()
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.elapsed)
            .sum::<f64>()
    };
    let survey = session
        .survey()
        .ok_or(Error::SessionNotDone(session.phase()))?;
    use PredictionKind::{Action, Goal};
    use Stage::{Final, Initial};
    Ok(MetricsReport {
        seed: cfg.seed,
        condition: cfg.condition,
        final_performance,
        num_demonstrations,
        demo_sets,
        teaching_efficiency,
        early_stage_efficiency,
        early_stage_truncated,
        action_accuracy_initial: accuracy(Action, Initial),
        action_accuracy_final: accuracy(Action, Final),
        goal_accuracy_initial: accuracy(Goal, Initial),
        goal_accuracy_final: accuracy(Goal, Final),
        action_certainty_initial: certainty(Action, Initial),
        action_certainty_final: certainty(Action, Final),
        goal_certainty_initial: certainty(Goal, Initial),
        goal_certainty_final: certainty(Goal, Final),
        action_time: time(Action),
        goal_time: time(Goal),
        survey_q1: survey.q1,
        survey_q2: survey.q2,
        survey_q3: survey.q3,
        survey_q4: survey.q4,
        performance_history: history.to_vec(),
    })
}

/// Pooled sample size up to which p-values are computed by enumeration.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U for the first sample: its rank sum minus `n_a(n_a+1)/2`.
    pub u: f64,
    /// Two-sided.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn prepare(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidConfig("samples contain NaN".into()));
    }
    let ranks = midranks(&pooled);
    let na = a.len() as f64;
    let u = ranks[..a.len()].iter().sum::<f64>() - na * (na + 1.0) / 2.0;
    Ok((ranks, u))
}

/// Mann-Whitney U with midranks for ties. Exact when the pooled size is at
/// most [`EXACT_LIMIT`], otherwise the tie- and continuity-corrected normal
/// approximation.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.len() + b.len() <= EXACT_LIMIT {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Exact two-sided p by enumerating every split of the pooled midranks.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let (ranks, u) = prepare(a, b)?;
    let (na, nb) = (a.len(), b.len());
    let centre = (na * nb) as f64 / 2.0;
    let observed = (u - centre).abs();
    let offset = (na * (na + 1)) as f64 / 2.0;
    let (mut extreme, mut total) = (0u64, 0u64);
    let mut chosen = Vec::with_capacity(na);
    enumerate(&ranks, na, 0, &mut chosen, &mut |sum| {
        total += 1;
        if ((sum - offset) - centre).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    });
    Ok(MannWhitney {
        u,
        p: extreme as f64 / total as f64,
        exact: true,
    })
}

fn enumerate(
    ranks: &[f64],
    left: usize,
    from: usize,
    chosen: &mut Vec<f64>,
    visit: &mut impl FnMut(f64),
) {
    if left == 0 {
        visit(chosen.iter().sum());
        return;
    }
    for i in from..=ranks.len() - left {
        chosen.push(ranks[i]);
        enumerate(ranks, left - 1, i + 1, chosen, visit);
        chosen.pop();
    }
}

pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let (ranks, u) = prepare(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let variance = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = (((u - na * nb / 2.0).abs() - 0.5).max(0.0)) / variance.sqrt();
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(MannWhitney { u, p, exact: false })
}
