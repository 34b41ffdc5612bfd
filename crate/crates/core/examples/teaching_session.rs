//! Drives one study session event by event and prints each phase change.

use lfd_feedback::metrics::compute_report;
use lfd_feedback::protocol::{Condition, Outcome, SessionState, StudySetup};
use lfd_feedback::simteacher::{run_session, TeacherStrategy};

fn main() -> lfd_feedback::Result<()> {
    let mut setup = StudySetup::default();
    setup.session.condition = Condition::Ef;
    setup.session.seed = 5;
    // the scripted teacher records its events; replay them to watch the schedule
    let sim = run_session(&setup, TeacherStrategy::FeedbackResponsive)?;

    let mut session = SessionState::new(setup.clone())?;
    let mut phase = session.phase();
    println!("start in {phase:?}");
    for event in &sim.events {
        let outcome = session.advance(event)?;
        if let Outcome::SetLearned {
            performance,
            explanations,
            ..
        } = &outcome
        {
            let shown = explanations.as_ref().map_or(0, |e| e.trajectories.len());
            println!(
                "set {} learned: performance {performance:.3}, {shown} explanations",
                session.demo_sets_completed()
            );
        }
        if session.phase() != phase {
            phase = session.phase();
            println!("  -> {phase:?} {:?}", session.stage());
        }
    }
    let report = compute_report(&session, &setup.session)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("reports serialize")
    );
    Ok(())
}
