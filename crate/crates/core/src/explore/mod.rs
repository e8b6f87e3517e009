//! Anonymous browsing sessions with favorites, the append-only session event
//! log, and descriptive usage reports computed from it.

mod events;
mod sessions;
mod usage;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use events::{EventError, EventKind, EventLog, SessionEvent};
pub use sessions::{Session, SessionError, SessionStore, DEFAULT_TTL_DAYS};
pub use usage::{compute_usage, Summary, UsageReport};

/// Screens of the exploration interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Screen {
    Home,
    Category,
    Object,
    Painting,
    Favorites,
    Canvas,
}

impl Screen {
    pub const ALL: [Screen; 6] =
        [Screen::Home, Screen::Category, Screen::Object, Screen::Painting, Screen::Favorites, Screen::Canvas];

    pub fn as_str(self) -> &'static str {
        match self {
            Screen::Home => "Home",
            Screen::Category => "Category",
            Screen::Object => "Object",
            Screen::Painting => "Painting",
            Screen::Favorites => "Favorites",
            Screen::Canvas => "Canvas",
        }
    }
}

impl fmt::Display for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Screen {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Screen::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown screen {s:?}"))
    }
}
