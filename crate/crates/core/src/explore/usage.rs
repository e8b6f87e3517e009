use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{EventKind, Screen, SessionEvent};
use crate::taxonomy::Category;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sessions: usize,
    pub total: usize,
    pub mean: f64,
    pub median: f64,
    pub min: usize,
    pub max: usize,
}

impl Summary {
    fn of(mut values: Vec<usize>) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        values.sort_unstable();
        let n = values.len();
        let total: usize = values.iter().sum();
        let median = if n % 2 == 1 { values[n / 2] as f64 } else { (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0 };
        Self { sessions: n, total, mean: total as f64 / n as f64, median, min: values[0], max: values[n - 1] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    pub events: usize,
    /// Mean seconds between paired enter and leave events.
    pub per_screen_avg_duration: BTreeMap<Screen, f64>,
    /// Number of paired visits behind each average.
    pub per_screen_visits: BTreeMap<Screen, usize>,
    /// Category screen entries per category.
    pub category_visits: BTreeMap<Category, usize>,
    pub saves_per_session: Summary,
    pub generations: usize,
    /// Leaves without a matching enter, enters never left or re-entered
    /// before leaving.
    pub warnings: usize,
}

impl UsageReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("events: {}\n", self.events);
        if !self.per_screen_avg_duration.is_empty() {
            out.push_str("average time per screen:\n");
            for (screen, secs) in &self.per_screen_avg_duration {
                let whole = secs.round() as u64;
                out.push_str(&format!(
                    "  {:<10} {:>2}m {:02}s  ({} visits)\n",
                    screen.as_str(),
                    whole / 60,
                    whole % 60,
                    self.per_screen_visits.get(screen).copied().unwrap_or(0)
                ));
            }
        }
        if !self.category_visits.is_empty() {
            out.push_str("category visits:\n");
            for (cat, n) in &self.category_visits {
                out.push_str(&format!("  {:<13} {n}\n", cat.as_str()));
            }
        }
        let s = &self.saves_per_session;
        out.push_str(&format!(
            "saves per session: mean {:.2}, median {}, min {}, max {} over {} sessions\n",
            s.mean, s.median, s.min, s.max, s.sessions
        ));
        out.push_str(&format!("generations: {}\nwarnings: {}\n", self.generations, self.warnings));
        out
    }
}

/// Aggregates an event log. Events are grouped by session and ordered by
/// timestamp (ties keep log order). A leave closes the open enter of the
/// same screen in the same session.
pub fn compute_usage(events: &[SessionEvent]) -> UsageReport {
    let mut by_session: BTreeMap<&str, Vec<(usize, &SessionEvent)>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        by_session.entry(e.session_id.as_str()).or_default().push((i, e));
    }

    let mut durations_ms: BTreeMap<Screen, (i64, usize)> = BTreeMap::new();
    let mut category_visits: BTreeMap<Category, usize> = BTreeMap::new();
    let mut saves = Vec::with_capacity(by_session.len());
    let mut generations = 0;
    let mut warnings = 0;

    for (_, mut evs) in by_session {
        evs.sort_by_key(|(i, e)| (e.timestamp, *i));
        let mut open: HashMap<Screen, DateTime<Utc>> = HashMap::new();
        let mut session_saves = 0;
        for (_, e) in evs {
            match (e.kind, e.screen) {
                (EventKind::ScreenEnter, Some(screen)) => {
                    if open.insert(screen, e.timestamp).is_some() {
                        warnings += 1;
                    }
                    if screen == Screen::Category {
                        if let Some(c) = e.category {
                            *category_visits.entry(c).or_default() += 1;
                        }
                    }
                }
                (EventKind::ScreenLeave, Some(screen)) => match open.remove(&screen) {
                    Some(start) => {
                        let slot = durations_ms.entry(screen).or_default();
                        slot.0 += (e.timestamp - start).num_milliseconds();
                        slot.1 += 1;
                    }
                    None => warnings += 1,
                },
                (EventKind::SaveObject, _) => session_saves += 1,
                (EventKind::GenerateImage, _) => generations += 1,
                _ => {}
            }
        }
        warnings += open.len();
        saves.push(session_saves);
    }

    UsageReport {
        events: events.len(),
        per_screen_avg_duration: durations_ms
            .iter()
            .map(|(s, (ms, n))| (*s, *ms as f64 / (*n as f64 * 1000.0)))
            .collect(),
        per_screen_visits: durations_ms.iter().map(|(s, (_, n))| (*s, *n)).collect(),
        category_visits,
        saves_per_session: Summary::of(saves),
        generations,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn at(secs: i64) -> DateTime<Utc> {
        DateTime::UNIX_EPOCH + Duration::seconds(secs)
    }

    fn screen(session: &str, kind: EventKind, s: Screen, t: i64) -> SessionEvent {
        SessionEvent {
            session_id: session.into(),
            timestamp: at(t),
            kind,
            screen: Some(s),
            object_id: None,
            category: None,
        }
    }

    fn object(session: &str, kind: EventKind, id: &str, t: i64) -> SessionEvent {
        SessionEvent {
            session_id: session.into(),
            timestamp: at(t),
            kind,
            screen: None,
            object_id: Some(id.into()),
            category: None,
        }
    }

    #[test]
    fn single_object_visit() {
        let evs = vec![
            screen("s", EventKind::ScreenEnter, Screen::Object, 0),
            screen("s", EventKind::ScreenLeave, Screen::Object, 202),
        ];
        let r = compute_usage(&evs);
        assert_eq!(r.per_screen_avg_duration[&Screen::Object], 202.0);
        assert!(r.to_text().contains(" 3m 22s"));
        assert_eq!(r.warnings, 0);
    }

    #[test]
    fn category_visit_totals() {
        let mut evs = Vec::new();
        for s in ["a", "b"] {
            for i in 0..6 {
                let mut e = screen(s, EventKind::ScreenEnter, Screen::Category, i * 10);
                e.category = Some(if i % 2 == 0 { Category::Occultism } else { Category::Animal });
                evs.push(e);
                evs.push(screen(s, EventKind::ScreenLeave, Screen::Category, i * 10 + 5));
            }
        }
        let r = compute_usage(&evs);
        assert_eq!(r.category_visits.values().sum::<usize>(), 12);
        assert_eq!(r.category_visits[&Category::Occultism], 6);
        assert_eq!(r.per_screen_visits[&Screen::Category], 12);
        assert_eq!(r.per_screen_avg_duration[&Screen::Category], 5.0);
    }

    #[test]
    fn empty_log() {
        let r = compute_usage(&[]);
        assert_eq!(r, UsageReport::default());
    }

    #[test]
    fn unpaired_events_warn() {
        let evs = vec![
            screen("s", EventKind::ScreenLeave, Screen::Home, 1),
            screen("s", EventKind::ScreenEnter, Screen::Painting, 2),
            screen("s", EventKind::ScreenEnter, Screen::Painting, 4),
            screen("s", EventKind::ScreenLeave, Screen::Painting, 10),
            screen("s", EventKind::ScreenEnter, Screen::Canvas, 11),
        ];
        let r = compute_usage(&evs);
        // stray leave, re-entered painting, canvas never left
        assert_eq!(r.warnings, 3);
        assert_eq!(r.per_screen_avg_duration[&Screen::Painting], 6.0);
        assert!(!r.per_screen_avg_duration.contains_key(&Screen::Home));
    }

    #[test]
    fn order_by_timestamp_not_log_position() {
        let evs = vec![
            screen("s", EventKind::ScreenLeave, Screen::Home, 30),
            screen("s", EventKind::ScreenEnter, Screen::Home, 0),
        ];
        let r = compute_usage(&evs);
        assert_eq!(r.per_screen_avg_duration[&Screen::Home], 30.0);
        assert_eq!(r.warnings, 0);
    }

    #[test]
    fn saves_summary() {
        let mut evs = Vec::new();
        for (s, n) in [("a", 6), ("b", 2), ("c", 7)] {
            for i in 0..n {
                evs.push(object(s, EventKind::SaveObject, &format!("d{i}"), i));
            }
        }
        evs.push(object("a", EventKind::GenerateImage, "job", 99));
        let r = compute_usage(&evs);
        assert_eq!(r.saves_per_session.sessions, 3);
        assert_eq!(r.saves_per_session.median, 6.0);
        assert_eq!(r.saves_per_session.mean, 5.0);
        assert_eq!((r.saves_per_session.min, r.saves_per_session.max), (2, 7));
        assert_eq!(r.generations, 1);
    }

    #[test]
    fn event_validation() {
        let mut e = screen("s", EventKind::ScreenEnter, Screen::Home, 0);
        assert!(e.validate().is_ok());
        e.screen = None;
        assert!(e.validate().is_err());
        let mut o = object("s", EventKind::SaveObject, "d", 0);
        assert!(o.validate().is_ok());
        o.object_id = None;
        assert!(o.validate().is_err());
        let mut c = object("s", EventKind::SaveObject, "d", 0);
        c.category = Some(Category::Food);
        assert!(c.validate().is_err());
        let json = r#"{"session_id":"s","timestamp":"2024-01-01T00:00:00Z","kind":"screen_enter","screen":"Lobby"}"#;
        assert!(serde_json::from_str::<SessionEvent>(json).is_err());
    }

    #[test]
    fn log_reload_reproduces_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let evs = vec![
            screen("s", EventKind::ScreenEnter, Screen::Object, 0),
            screen("s", EventKind::ScreenLeave, Screen::Object, 202),
        ];
        let before = {
            let log = crate::explore::EventLog::open(&path).unwrap();
            for e in &evs {
                log.append(e.clone()).unwrap();
            }
            assert!(log.append(object("", EventKind::SaveObject, "x", 0)).is_err());
            compute_usage(&log.events())
        };
        let log = crate::explore::EventLog::open(&path).unwrap();
        assert_eq!(compute_usage(&log.events()), before);
    }
}
