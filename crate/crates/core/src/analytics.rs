//! Dwell-based exploration counts over learner session event logs.
//!
//! Focus is tracked on two independent tracks. The post track follows
//! `view_post` events. The comment track follows `view_comment` events and
//! loses focus when a different post is viewed. A dwell interval runs from
//! the first view of a subject to the next event on the same track that
//! views a different subject. Re-viewing the focused subject does not break
//! the interval. An interval still open at the end of the log is only closed
//! if an explicit end time is supplied.
//!
//! A subject counts as explored when any single interval is strictly longer
//! than the threshold; each subject counts at most once per session.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_THRESHOLD_MS: i64 = 5000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("event {index} at {timestamp} ms precedes the previous event at {previous} ms")]
    OutOfOrder { index: usize, timestamp: i64, previous: i64 },
    #[error("event {index} belongs to session {found}, expected {expected}")]
    WrongSession { index: usize, expected: String, found: String },
    #[error("event {index} ({kind:?}) has an empty subject")]
    MissingSubject { index: usize, kind: EventKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ViewPost,
    ViewComment,
    FilterChange,
    NoteAdd,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    /// Unix milliseconds.
    pub timestamp: i64,
    pub kind: EventKind,
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub session_id: String,
    pub threshold_ms: i64,
    pub posts_explored: usize,
    pub comments_explored: usize,
    /// Total closed dwell per post across all intervals.
    pub post_dwell_ms: BTreeMap<String, i64>,
    pub comment_dwell_ms: BTreeMap<String, i64>,
}

/// Checks ordering and subject presence for one session's events.
pub fn validate_events(session_id: &str, events: &[SessionEvent], after: Option<i64>) -> Result<(), AnalyticsError> {
    let mut prev = after;
    for (index, e) in events.iter().enumerate() {
        if e.session_id != session_id {
            return Err(AnalyticsError::WrongSession {
                index,
                expected: session_id.to_string(),
                found: e.session_id.clone(),
            });
        }
        if let Some(p) = prev {
            if e.timestamp < p {
                return Err(AnalyticsError::OutOfOrder { index, timestamp: e.timestamp, previous: p });
            }
        }
        let needs_subject = matches!(
            e.kind,
            EventKind::ViewPost | EventKind::ViewComment | EventKind::Jump | EventKind::NoteAdd
        );
        if needs_subject && e.subject_id.is_empty() {
            return Err(AnalyticsError::MissingSubject { index, kind: e.kind });
        }
        prev = Some(e.timestamp);
    }
    Ok(())
}

#[derive(Default)]
struct Track {
    focus: Option<(String, i64)>,
    dwell: BTreeMap<String, i64>,
    explored: BTreeSet<String>,
}

impl Track {
    fn close(&mut self, at: i64, threshold: i64) {
        if let Some((subject, since)) = self.focus.take() {
            let d = at - since;
            *self.dwell.entry(subject.clone()).or_insert(0) += d;
            if d > threshold {
                self.explored.insert(subject);
            }
        }
    }

    fn view(&mut self, subject: &str, at: i64, threshold: i64) {
        if self.focus.as_ref().is_some_and(|(s, _)| s == subject) {
            return;
        }
        self.close(at, threshold);
        self.focus = Some((subject.to_string(), at));
    }
}

/// Folds a session log into exploration counts. `end_ms` closes whatever
/// is still in focus.
pub fn exploration_report(
    session_id: &str,
    events: &[SessionEvent],
    threshold_ms: i64,
    end_ms: Option<i64>,
) -> Result<ExplorationReport, AnalyticsError> {
    validate_events(session_id, events, None)?;
    let mut posts = Track::default();
    let mut comments = Track::default();
    for e in events {
        match e.kind {
            EventKind::ViewPost => {
                let switching = posts.focus.as_ref().is_some_and(|(s, _)| s != &e.subject_id);
                posts.view(&e.subject_id, e.timestamp, threshold_ms);
                if switching {
                    comments.close(e.timestamp, threshold_ms);
                }
            }
            EventKind::ViewComment => comments.view(&e.subject_id, e.timestamp, threshold_ms),
            EventKind::FilterChange | EventKind::NoteAdd | EventKind::Jump => {}
        }
    }
    if let Some(end) = end_ms {
        let last = events.last().map_or(end, |e| e.timestamp);
        let end = end.max(last);
        posts.close(end, threshold_ms);
        comments.close(end, threshold_ms);
    }
    Ok(ExplorationReport {
        session_id: session_id.to_string(),
        threshold_ms,
        posts_explored: posts.explored.len(),
        comments_explored: comments.explored.len(),
        post_dwell_ms: posts.dwell,
        comment_dwell_ms: comments.dwell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: i64, kind: EventKind, subject: &str) -> SessionEvent {
        SessionEvent { session_id: "s".into(), timestamp: t, kind, subject_id: subject.into(), detail: None }
    }

    #[test]
    fn single_long_view() {
        let log = [ev(0, EventKind::ViewPost, "A"), ev(6000, EventKind::ViewPost, "B")];
        let r = exploration_report("s", &log, DEFAULT_THRESHOLD_MS, None).unwrap();
        assert_eq!(r.posts_explored, 1);
        assert_eq!(r.post_dwell_ms["A"], 6000);
        assert!(!r.post_dwell_ms.contains_key("B"));
    }

    #[test]
    fn revisit_counts_once_and_open_interval_is_ignored() {
        let log = [
            ev(0, EventKind::ViewPost, "A"),
            ev(3000, EventKind::ViewPost, "B"),
            ev(4000, EventKind::ViewPost, "A"),
            ev(10000, EventKind::ViewPost, "B"),
        ];
        let r = exploration_report("s", &log, DEFAULT_THRESHOLD_MS, None).unwrap();
        assert_eq!(r.posts_explored, 1);
        assert_eq!(r.post_dwell_ms["A"], 9000);
        assert_eq!(r.post_dwell_ms["B"], 1000);
        let closed = exploration_report("s", &log, DEFAULT_THRESHOLD_MS, Some(16000)).unwrap();
        assert_eq!(closed.posts_explored, 2);
    }

    #[test]
    fn exactly_threshold_is_not_explored() {
        let log = [ev(0, EventKind::ViewPost, "A"), ev(5000, EventKind::ViewPost, "B")];
        assert_eq!(exploration_report("s", &log, 5000, None).unwrap().posts_explored, 0);
    }

    #[test]
    fn empty_log() {
        let r = exploration_report("s", &[], DEFAULT_THRESHOLD_MS, None).unwrap();
        assert_eq!((r.posts_explored, r.comments_explored), (0, 0));
    }

    #[test]
    fn same_subject_views_do_not_split_dwell() {
        let log = [
            ev(0, EventKind::ViewPost, "A"),
            ev(3000, EventKind::ViewPost, "A"),
            ev(3500, EventKind::FilterChange, ""),
            ev(5500, EventKind::ViewPost, "B"),
        ];
        assert_eq!(exploration_report("s", &log, 5000, None).unwrap().posts_explored, 1);
    }

    #[test]
    fn comment_track() {
        let log = [
            ev(0, EventKind::ViewPost, "A"),
            ev(1000, EventKind::ViewComment, "c1"),
            ev(7000, EventKind::ViewComment, "c2"),
            ev(9000, EventKind::ViewPost, "B"),
        ];
        let r = exploration_report("s", &log, 5000, None).unwrap();
        assert_eq!(r.comments_explored, 1);
        assert_eq!(r.comment_dwell_ms["c2"], 2000);
        assert_eq!(r.posts_explored, 1);
    }

    #[test]
    fn out_of_order_is_rejected() {
        let log = [ev(10, EventKind::ViewPost, "A"), ev(5, EventKind::ViewPost, "B")];
        assert_eq!(
            exploration_report("s", &log, 5000, None).unwrap_err(),
            AnalyticsError::OutOfOrder { index: 1, timestamp: 5, previous: 10 }
        );
    }
}
