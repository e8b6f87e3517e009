use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Screen;
use crate::taxonomy::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ScreenEnter,
    ScreenLeave,
    SaveObject,
    UnsaveObject,
    GenerateImage,
}

/// One interaction. Screen events carry `screen` (and `category` when the
/// screen shows a category); object events carry `object_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen: Option<Screen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
}

#[derive(Debug, Error)]
pub enum EventError {
    #[error("malformed event: {0}")]
    Malformed(String),
    #[error("corrupt event log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SessionEvent {
    pub fn validate(&self) -> Result<(), EventError> {
        if self.session_id.trim().is_empty() {
            return Err(EventError::Malformed("session_id is empty".into()));
        }
        match self.kind {
            EventKind::ScreenEnter | EventKind::ScreenLeave => {
                if self.screen.is_none() {
                    return Err(EventError::Malformed("screen events need a screen".into()));
                }
                if self.object_id.is_some() {
                    return Err(EventError::Malformed("screen events carry no object_id".into()));
                }
            }
            EventKind::SaveObject | EventKind::UnsaveObject | EventKind::GenerateImage => {
                if self.object_id.as_deref().is_none_or(|s| s.is_empty()) {
                    return Err(EventError::Malformed("object events need an object_id".into()));
                }
                if self.screen.is_some() {
                    return Err(EventError::Malformed("object events carry no screen".into()));
                }
            }
        }
        if self.category.is_some() && self.screen.is_none() {
            return Err(EventError::Malformed("category is only valid on screen events".into()));
        }
        Ok(())
    }
}

/// Append-only event log. With a path, every event is written as one JSON
/// line before it is acknowledged and the log is reloaded on open.
#[derive(Debug)]
pub struct EventLog {
    path: Option<PathBuf>,
    inner: Mutex<(Vec<SessionEvent>, Option<File>)>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self { path: None, inner: Mutex::new((Vec::new(), None)) }
    }

    pub fn open(path: &Path) -> Result<Self, EventError> {
        let events = Self::read(path)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: Some(path.to_path_buf()), inner: Mutex::new((events, Some(file))) })
    }

    /// Reads a log file without opening it for writing.
    pub fn read(path: &Path) -> Result<Vec<SessionEvent>, EventError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ev: SessionEvent =
                serde_json::from_str(line).map_err(|e| EventError::Corrupt { line: i + 1, reason: e.to_string() })?;
            out.push(ev);
        }
        Ok(out)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&self, event: SessionEvent) -> Result<(), EventError> {
        event.validate()?;
        let mut guard = self.inner.lock();
        if let Some(file) = guard.1.as_mut() {
            let mut line = serde_json::to_string(&event).expect("event serializes");
            line.push('\n');
            file.write_all(line.as_bytes())?;
        }
        guard.0.push(event);
        Ok(())
    }

    pub fn events(&self) -> Vec<SessionEvent> {
        self.inner.lock().0.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
