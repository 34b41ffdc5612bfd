//! Writes a session log, replays it, then shows how tampering is caught.

use lfd_feedback::eventlog::{read_log, replay, EventLog, Payload};
use lfd_feedback::gridworld::Action;
use lfd_feedback::protocol::{Event, SessionState, StudySetup};
use lfd_feedback::simteacher::{run_session, TeacherStrategy};

fn main() -> lfd_feedback::Result<()> {
    let setup = StudySetup::default();
    let sim = run_session(&setup, TeacherStrategy::CoverageStart)?;

    let dir = std::env::temp_dir().join(format!("lfd-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("session.jsonl");
    let _ = std::fs::remove_file(&path);
    let mut log = EventLog::create(&path, "demo-session", &setup)?;
    let mut live = SessionState::new(setup)?;
    for event in &sim.events {
        let outcome = live.advance(event)?;
        log.append(event, &outcome)?;
    }
    println!("wrote {} records to {}", log.last_seq(), path.display());

    let mut records = read_log(&path)?;
    let replayed = replay(&records)?;
    println!(
        "replayed report matches: {}",
        replayed.report.as_ref() == Some(&sim.report)
    );

    // flip the first demonstration step that is not already Down
    let target = records.iter_mut().find_map(|r| match &mut r.payload {
        Payload::Event {
            event: Event::DemoStep { action },
            ..
        } if *action != Action::Down => Some((r.seq, action)),
        _ => None,
    });
    if let Some((seq, action)) = target {
        *action = Action::Down;
        println!("changed the action recorded at sequence {seq}");
    }
    match replay(&records) {
        Err(e) => println!("replay refused: {e}"),
        Ok(_) => println!("replay unexpectedly succeeded"),
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
