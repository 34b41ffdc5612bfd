use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lfd_feedback::eventlog::EventLog;
use lfd_feedback::gridworld::{Cell, GridSpec};
use lfd_feedback::protocol::{SessionConfig, SessionState, StudySetup};
use lfd_feedback::simteacher::{run_session, TeacherStrategy};

const SMALL_CONFIG: &str = r#"
[grid]
width = 4
height = 4
preferred_goal = { row = 0, col = 3 }
non_preferred_goal = { row = 3, col = 0 }

[session]
demos_per_set = 2
predictions_per_subtask = 3
k_explanations = 3
max_demo_sets = 3

[experiment]
seeds = 4
"#;

fn lfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfd"))
        .args(args)
        .output()
        .unwrap()
}

fn small_setup() -> StudySetup {
    StudySetup {
        grid: GridSpec::new(4, 4, Cell::new(0, 3), Cell::new(3, 0)).unwrap(),
        session: SessionConfig {
            demos_per_set: 2,
            predictions_per_subtask: 3,
            k_explanations: 3,
            max_demo_sets: 3,
            ..SessionConfig::default()
        },
        ..StudySetup::default()
    }
}

/// Writes the log of a simulated session, stopping after `keep` events.
fn write_log(dir: &Path, keep: Option<usize>) -> PathBuf {
    let setup = small_setup();
    let sim = run_session(&setup, TeacherStrategy::CoverageStart).unwrap();
    let path = dir.join("session.jsonl");
    let mut log = EventLog::create(&path, "cli-test", &setup).unwrap();
    let mut live = SessionState::new(setup).unwrap();
    for event in sim.events.iter().take(keep.unwrap_or(usize::MAX)) {
        let outcome = live.advance(event).unwrap();
        log.append(event, &outcome).unwrap();
    }
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lfd(&["bogus"]).status.code(), Some(1));
    assert_eq!(lfd(&["compare", "--a", "x.csv"]).status.code(), Some(1));
    assert_eq!(
        lfd(&[
            "run-experiment",
            "--config",
            "c",
            "--condition",
            "maybe",
            "--out",
            "o"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(lfd(&["--help"]).status.code(), Some(0));
}

#[test]
fn experiment_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL_CONFIG).unwrap();
    let ef = dir.path().join("ef.csv");
    let nf = dir.path().join("nf.csv");
    for (cond, out) in [("ef", &ef), ("nf", &nf)] {
        let o = lfd(&[
            "run-experiment",
            "--config",
            s(&cfg),
            "--condition",
            cond,
            "--strategy",
            "coverage",
            "--out",
            s(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&ef).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("seed,condition,final_performance,num_demonstrations"));

    let o = lfd(&[
        "compare",
        "--a",
        s(&ef),
        "--b",
        s(&nf),
        "--metric",
        "num_demonstrations",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("U = ") && stdout.contains("p = "),
        "{stdout}"
    );

    let o = lfd(&[
        "compare",
        "--a",
        s(&ef),
        "--b",
        s(&nf),
        "--metric",
        "no_such_metric",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn replay_and_report_of_finished_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_log(dir.path(), None);
    let o = lfd(&["replay", "--log", s(&log)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["condition"], "ef");

    let o = lfd(&["report", "--log", s(&log), "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 2);
}

#[test]
fn report_of_unfinished_log_is_an_engine_error() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_log(dir.path(), Some(4));
    assert_eq!(lfd(&["report", "--log", s(&log)]).status.code(), Some(3));
    assert!(lfd(&["replay", "--log", s(&log)]).status.success());
}

#[test]
fn tampered_log_fails_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_log(dir.path(), None);
    let text = std::fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // Drop record 3 so the sequence jumps.
    lines.remove(2);
    std::fs::write(&log, lines.join("\n")).unwrap();
    let o = lfd(&["replay", "--log", s(&log)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("at sequence 4:"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
