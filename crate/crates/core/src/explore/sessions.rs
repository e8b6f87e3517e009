use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TTL_DAYS: i64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    /// Last create or favorites change; the TTL runs from here.
    pub updated_at: DateTime<Utc>,
    /// Detection ids in save order, without duplicates.
    pub favorites: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("corrupt session log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Op {
    Create { session_id: String, at: DateTime<Utc> },
    Save { session_id: String, detection_id: String, at: DateTime<Utc> },
    Unsave { session_id: String, detection_id: String, at: DateTime<Utc> },
}

/// Sessions and their favorites, optionally persisted as an operation log.
/// All mutations go through one mutex so each session's changes are
/// serialized.
#[derive(Debug)]
pub struct SessionStore {
    ttl: Duration,
    inner: Mutex<(HashMap<String, Session>, Option<File>)>,
}

impl SessionStore {
    pub fn in_memory(ttl: Duration) -> Self {
        Self { ttl, inner: Mutex::new((HashMap::new(), None)) }
    }

    pub fn open(path: &Path, ttl: Duration) -> Result<Self, SessionError> {
        let mut sessions = HashMap::new();
        match std::fs::read_to_string(path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let op: Op = serde_json::from_str(line)
                        .map_err(|e| SessionError::Corrupt { line: i + 1, reason: e.to_string() })?;
                    apply(&mut sessions, &op);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { ttl, inner: Mutex::new((sessions, Some(file))) })
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn create(&self, now: DateTime<Utc>) -> Result<Session, SessionError> {
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let op = Op::Create { session_id: session_id.clone(), at: now };
        let mut g = self.inner.lock();
        log(&mut g.1, &op)?;
        apply(&mut g.0, &op);
        Ok(g.0[&session_id].clone())
    }

    pub fn get(&self, session_id: &str, now: DateTime<Utc>) -> Result<Session, SessionError> {
        let g = self.inner.lock();
        self.live(&g.0, session_id, now).cloned()
    }

    /// Adds a favorite. Returns false when it was already saved.
    pub fn save(&self, session_id: &str, detection_id: &str, now: DateTime<Utc>) -> Result<bool, SessionError> {
        self.mutate(session_id, detection_id, now, true)
    }

    /// Removes a favorite. Returns false when it was not saved.
    pub fn unsave(&self, session_id: &str, detection_id: &str, now: DateTime<Utc>) -> Result<bool, SessionError> {
        self.mutate(session_id, detection_id, now, false)
    }

    fn mutate(
        &self,
        session_id: &str,
        detection_id: &str,
        now: DateTime<Utc>,
        save: bool,
    ) -> Result<bool, SessionError> {
        let mut g = self.inner.lock();
        let present = self.live(&g.0, session_id, now)?.favorites.iter().any(|f| f == detection_id);
        if present == save {
            return Ok(false);
        }
        let (session_id, detection_id) = (session_id.to_string(), detection_id.to_string());
        let op = if save {
            Op::Save { session_id, detection_id, at: now }
        } else {
            Op::Unsave { session_id, detection_id, at: now }
        };
        log(&mut g.1, &op)?;
        apply(&mut g.0, &op);
        Ok(true)
    }

    fn live<'a>(
        &self,
        map: &'a HashMap<String, Session>,
        id: &str,
        now: DateTime<Utc>,
    ) -> Result<&'a Session, SessionError> {
        map.get(id)
            .filter(|s| s.updated_at + self.ttl > now)
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }
}

fn log(file: &mut Option<File>, op: &Op) -> Result<(), SessionError> {
    if let Some(f) = file {
        let mut line = serde_json::to_string(op).expect("op serializes");
        line.push('\n');
        f.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn apply(map: &mut HashMap<String, Session>, op: &Op) {
    match op {
        Op::Create { session_id, at } => {
            map.insert(
                session_id.clone(),
                Session { session_id: session_id.clone(), created_at: *at, updated_at: *at, favorites: Vec::new() },
            );
        }
        Op::Save { session_id, detection_id, at } => {
            if let Some(s) = map.get_mut(session_id) {
                if !s.favorites.contains(detection_id) {
                    s.favorites.push(detection_id.clone());
                }
                s.updated_at = *at;
            }
        }
        Op::Unsave { session_id, detection_id, at } => {
            if let Some(s) = map.get_mut(session_id) {
                s.favorites.retain(|f| f != detection_id);
                s.updated_at = *at;
            }
        }
    }
}
