//! Append-only, line-delimited JSON session logs and their replay.
//!
//! The first record of a log carries the session setup; every later record
//! carries one accepted event together with the outcome the engine produced.
//! Replaying feeds the events back through a fresh session and checks each
//! outcome against the recorded one.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_report, MetricsReport};
use crate::protocol::{Event, LearnedArtifacts, Outcome, Phase, SessionState, StudySetup};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Created { setup: StudySetup },
    Event { event: Event, outcome: Outcome },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub schema_version: u32,
    pub session_id: String,
    pub seq: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    #[serde(flatten)]
    pub payload: Payload,
}

pub fn now_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writer for one session's log file. Every append is flushed and synced
/// before it returns.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    session_id: String,
    last_seq: u64,
    frozen: bool,
}

impl EventLog {
    /// Creates the file and writes the setup record as sequence 1.
    pub fn create(path: impl AsRef<Path>, session_id: &str, setup: &StudySetup) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)?;
        let mut log = Self {
            path,
            file,
            session_id: session_id.to_string(),
            last_seq: 0,
            frozen: false,
        };
        log.persist(SessionEvent {
            schema_version: SCHEMA_VERSION,
            session_id: session_id.to_string(),
            seq: 1,
            timestamp: now_seconds(),
            payload: Payload::Created {
                setup: setup.clone(),
            },
        })?;
        Ok(log)
    }

    /// Opens an existing log for appending after `last_seq` records.
    pub fn reopen(path: impl AsRef<Path>, session_id: &str, last_seq: u64) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self {
            path,
            file,
            session_id: session_id.to_string(),
            last_seq,
            frozen: false,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Appends an accepted event and returns its sequence number.
    pub fn append(&mut self, event: &Event, outcome: &Outcome) -> Result<u64> {
        let seq = self.last_seq + 1;
        self.persist(SessionEvent {
            schema_version: SCHEMA_VERSION,
            session_id: self.session_id.clone(),
            seq,
            timestamp: now_seconds(),
            payload: Payload::Event {
                event: event.clone(),
                outcome: outcome.clone(),
            },
        })?;
        Ok(seq)
    }

    /// Writes `record` durably. A sequence gap freezes the log.
    pub fn persist(&mut self, record: SessionEvent) -> Result<()> {
        if self.frozen {
            return Err(Error::Integrity {
                seq: record.seq,
                reason: "log is frozen after an earlier integrity failure".into(),
            });
        }
        if record.seq != self.last_seq + 1 {
            self.frozen = true;
            return Err(Error::Integrity {
                seq: record.seq,
                reason: format!("expected sequence {}", self.last_seq + 1),
            });
        }
        let mut line = serde_json::to_vec(&record)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.last_seq = record.seq;
        Ok(())
    }
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<SessionEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SessionEvent = serde_json::from_str(&line).map_err(|e| Error::Integrity {
            seq: i as u64 + 1,
            reason: format!("unreadable record: {e}"),
        })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub session_id: String,
    pub session: SessionState,
    /// Present when the replayed session reached its end.
    pub report: Option<MetricsReport>,
}

/// Re-derives a session from its records, failing at the first sequence
/// number whose outcome differs from what was recorded.
pub fn replay(records: &[SessionEvent]) -> Result<Replay> {
    replay_with(records, None)
}

/// [`replay`] reusing already computed practice artifacts.
pub fn replay_with(records: &[SessionEvent], practice: Option<LearnedArtifacts>) -> Result<Replay> {
    let first = records.first().ok_or(Error::Integrity {
        seq: 1,
        reason: "empty log".into(),
    })?;
    let Payload::Created { setup } = &first.payload else {
        return Err(Error::Integrity {
            seq: first.seq,
            reason: "log does not start with a setup record".into(),
        });
    };
    let mut session = match practice {
        Some(p) => SessionState::with_practice(setup.clone(), p)?,
        None => SessionState::new(setup.clone())?,
    };
    for (i, record) in records.iter().enumerate() {
        let expected = i as u64 + 1;
        let fail = |reason: String| Error::Integrity {
            seq: record.seq,
            reason,
        };
        if record.schema_version != SCHEMA_VERSION {
            return Err(fail(format!(
                "unsupported schema_version {}",
                record.schema_version
            )));
        }
        if record.seq != expected {
            return Err(fail(format!("expected sequence {expected}")));
        }
        if record.session_id != first.session_id {
            return Err(fail(format!(
                "session id {} in a log of {}",
                record.session_id, first.session_id
            )));
        }
        match &record.payload {
            Payload::Created { .. } if i == 0 => {}
            Payload::Created { .. } => return Err(fail("repeated setup record".into())),
            Payload::Event { event, outcome } => {
                let derived = session
                    .advance(event)
                    .map_err(|e| fail(format!("event rejected on replay: {e}")))?;
                if &derived != outcome {
                    return Err(fail(format!(
                        "outcome differs on replay: recorded {outcome:?}, derived {derived:?}"
                    )));
                }
            }
        }
    }
    let report = if session.phase() == Phase::Done {
        Some(compute_report(&session, &session.setup().session)?)
    } else {
        None
    };
    Ok(Replay {
        session_id: first.session_id.clone(),
        session,
        report,
    })
}
