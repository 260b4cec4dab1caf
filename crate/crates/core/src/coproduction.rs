//! Governance for continuous human/AI co-production sessions.
//!
//! Three practices apply to a sustained working dialogue: periodic
//! re-grounding checkpoints written in the human's own words, a log of
//! AI-suggested pivots with an end-of-session merit review of each adopted
//! one, and an adversarial self-check naming at least three counterarguments
//! before the output is finalized.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ids::{PersonId, SessionId, Timestamp};

pub const MIN_INTERVAL_MINUTES: u32 = 25;
pub const MAX_INTERVAL_MINUTES: u32 = 30;
pub const DEFAULT_INTERVAL_MINUTES: u32 = 25;
pub const DEFAULT_GRACE_MINUTES: u32 = 5;
pub const MIN_COUNTERARGUMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub at: Timestamp,
    pub regrounding_note: String,
    /// Owner attests the note was written without AI assistance. The engine
    /// cannot verify this.
    pub unassisted: bool,
    /// Minutes past `interval + grace` when this checkpoint was late.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overdue_minutes: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pivot {
    pub pivot_id: u32,
    pub at: Timestamp,
    pub ai_suggestion: String,
    pub adopted: bool,
    /// Marked by the human; a significant pivot makes a checkpoint due.
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merit_note: Option<String>,
}

impl Pivot {
    pub fn needs_review(&self) -> bool {
        self.adopted
            && self
                .merit_note
                .as_deref()
                .map_or(true, |n| n.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub counterarguments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoProductionSession {
    pub session_id: SessionId,
    pub owner: PersonId,
    pub started_at: Timestamp,
    pub checkpoint_interval_minutes: u32,
    pub grace_minutes: u32,
    pub checkpoints: Vec<Checkpoint>,
    pub pivots: Vec<Pivot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selfcheck: Option<SelfCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<Timestamp>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("checkpoint interval {0} min is outside 25..=30")]
    Interval(u32),
    #[error("session {0} is closed")]
    Closed(SessionId),
    #[error("session needs a named owner")]
    AnonymousOwner,
    #[error("no pivot {0} in this session")]
    UnknownPivot(u32),
    #[error("pivot {0} was not adopted; it needs no merit review")]
    NotAdopted(u32),
    #[error("timestamp {0} precedes the previous session entry")]
    OutOfOrder(Timestamp),
    #[error("finalize blocked: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Blocked(Vec<FinalizeBlocker>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "missing", rename_all = "snake_case")]
pub enum FinalizeBlocker {
    Counterarguments { have: usize, need: usize },
    EmptyCounterargument { index: usize },
    UnreviewedPivot { pivot_id: u32 },
}

impl std::fmt::Display for FinalizeBlocker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FinalizeBlocker::Counterarguments { have, need } => {
                write!(f, "{have} counterargument(s) given, {need} required")
            }
            FinalizeBlocker::EmptyCounterargument { index } => {
                write!(f, "counterargument #{} is empty", index + 1)
            }
            FinalizeBlocker::UnreviewedPivot { pivot_id } => {
                write!(f, "adopted pivot {pivot_id} has no merit note")
            }
        }
    }
}

impl CoProductionSession {
    pub fn start(
        session_id: SessionId,
        owner: PersonId,
        started_at: Timestamp,
        checkpoint_interval_minutes: u32,
    ) -> Result<Self, SessionError> {
        if owner.is_blank() {
            return Err(SessionError::AnonymousOwner);
        }
        if !(MIN_INTERVAL_MINUTES..=MAX_INTERVAL_MINUTES).contains(&checkpoint_interval_minutes) {
            return Err(SessionError::Interval(checkpoint_interval_minutes));
        }
        Ok(Self {
            session_id,
            owner,
            started_at,
            checkpoint_interval_minutes,
            grace_minutes: DEFAULT_GRACE_MINUTES,
            checkpoints: Vec::new(),
            pivots: Vec::new(),
            selfcheck: None,
            closed_at: None,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.closed_at.is_some()
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        if self.is_closed() {
            Err(SessionError::Closed(self.session_id.clone()))
        } else {
            Ok(())
        }
    }

    fn last_checkpoint_at(&self) -> Timestamp {
        self.checkpoints.last().map_or(self.started_at, |c| c.at)
    }

    fn last_entry_at(&self) -> Timestamp {
        let p = self.pivots.last().map(|p| p.at);
        let c = self.last_checkpoint_at();
        p.map_or(c, |p| p.max(c))
    }

    /// True once the interval has elapsed since the last checkpoint (or the
    /// start), or right after a significant pivot.
    pub fn checkpoint_due(&self, now: Timestamp) -> Result<bool, SessionError> {
        self.ensure_open()?;
        let last = self.last_checkpoint_at();
        let significant_since = self.pivots.iter().any(|p| p.significant && p.at >= last);
        let elapsed = now - last;
        Ok(significant_since
            || elapsed >= chrono::Duration::minutes(self.checkpoint_interval_minutes as i64))
    }

    /// Record a checkpoint. Late checkpoints are recorded with how far past
    /// `interval + grace` they came, never refused.
    pub fn record_checkpoint(
        &mut self,
        at: Timestamp,
        regrounding_note: impl Into<String>,
        unassisted: bool,
    ) -> Result<&Checkpoint, SessionError> {
        self.ensure_open()?;
        if at < self.last_entry_at() {
            return Err(SessionError::OutOfOrder(at));
        }
        let gap = (at - self.last_checkpoint_at()).num_minutes();
        let allowed = (self.checkpoint_interval_minutes + self.grace_minutes) as i64;
        self.checkpoints.push(Checkpoint {
            at,
            regrounding_note: regrounding_note.into(),
            unassisted,
            overdue_minutes: (gap > allowed).then_some(gap - allowed),
        });
        Ok(self.checkpoints.last().expect("just pushed"))
    }

    pub fn log_pivot(
        &mut self,
        at: Timestamp,
        ai_suggestion: impl Into<String>,
        adopted: bool,
        significant: bool,
    ) -> Result<&Pivot, SessionError> {
        self.ensure_open()?;
        if at < self.last_entry_at() {
            return Err(SessionError::OutOfOrder(at));
        }
        let pivot_id = self.pivots.len() as u32 + 1;
        self.pivots.push(Pivot {
            pivot_id,
            at,
            ai_suggestion: ai_suggestion.into(),
            adopted,
            significant,
            merit_note: None,
        });
        Ok(self.pivots.last().expect("just pushed"))
    }

    pub fn review_pivot(
        &mut self,
        pivot_id: u32,
        merit_note: impl Into<String>,
    ) -> Result<(), SessionError> {
        self.ensure_open()?;
        let pivot = self
            .pivots
            .iter_mut()
            .find(|p| p.pivot_id == pivot_id)
            .ok_or(SessionError::UnknownPivot(pivot_id))?;
        if !pivot.adopted {
            return Err(SessionError::NotAdopted(pivot_id));
        }
        pivot.merit_note = Some(merit_note.into());
        Ok(())
    }

    /// Adopted pivots awaiting a merit note.
    pub fn pending_merit_reviews(&self) -> Vec<&Pivot> {
        self.pivots.iter().filter(|p| p.needs_review()).collect()
    }

    /// What would block finalizing with these counterarguments.
    pub fn finalize_blockers(&self, counterarguments: &[String]) -> Vec<FinalizeBlocker> {
        let mut blockers = Vec::new();
        if counterarguments.len() < MIN_COUNTERARGUMENTS {
            blockers.push(FinalizeBlocker::Counterarguments {
                have: counterarguments.len(),
                need: MIN_COUNTERARGUMENTS,
            });
        }
        for (index, c) in counterarguments.iter().enumerate() {
            if c.trim().is_empty() {
                blockers.push(FinalizeBlocker::EmptyCounterargument { index });
            }
        }
        for p in self.pending_merit_reviews() {
            blockers.push(FinalizeBlocker::UnreviewedPivot {
                pivot_id: p.pivot_id,
            });
        }
        blockers
    }

    /// Close the session, or report every missing element.
    pub fn finalize(
        &mut self,
        at: Timestamp,
        counterarguments: Vec<String>,
    ) -> Result<(), SessionError> {
        self.ensure_open()?;
        let blockers = self.finalize_blockers(&counterarguments);
        if !blockers.is_empty() {
            return Err(SessionError::Blocked(blockers));
        }
        self.selfcheck = Some(SelfCheck { counterarguments });
        self.closed_at = Some(at);
        Ok(())
    }

    /// Checkpoints that arrived later than `interval + grace`.
    pub fn missed_checkpoints(&self) -> impl Iterator<Item = &Checkpoint> {
        self.checkpoints.iter().filter(|c| c.overdue_minutes.is_some())
    }

    /// Plain-text timeline for the session record.
    pub fn transcript(&self) -> String {
        enum Entry<'a> {
            Checkpoint(&'a Checkpoint),
            Pivot(&'a Pivot),
        }
        let mut entries: Vec<(Timestamp, Entry)> = self
            .checkpoints
            .iter()
            .map(|c| (c.at, Entry::Checkpoint(c)))
            .chain(self.pivots.iter().map(|p| (p.at, Entry::Pivot(p))))
            .collect();
        entries.sort_by_key(|(at, _)| *at);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "Session {} (owner {}, checkpoint every {} min)",
            self.session_id, self.owner, self.checkpoint_interval_minutes
        );
        let _ = writeln!(out, "{}  started", self.started_at.to_rfc3339());
        for (at, e) in entries {
            match e {
                Entry::Checkpoint(c) => {
                    let late = c
                        .overdue_minutes
                        .map(|m| format!(" [late by {m} min]"))
                        .unwrap_or_default();
                    let attest = if c.unassisted { "" } else { " [not attested unassisted]" };
                    let _ = writeln!(
                        out,
                        "{}  checkpoint{late}{attest}: {}",
                        at.to_rfc3339(),
                        c.regrounding_note
                    );
                }
                Entry::Pivot(p) => {
                    let verdict = if p.adopted { "adopted" } else { "rejected" };
                    let sig = if p.significant { " (significant)" } else { "" };
                    let _ = writeln!(
                        out,
                        "{}  pivot #{}{sig} {verdict}: {}",
                        at.to_rfc3339(),
                        p.pivot_id,
                        p.ai_suggestion
                    );
                    if let Some(note) = &p.merit_note {
                        let _ = writeln!(out, "      merit: {note}");
                    }
                }
            }
        }
        if let Some(sc) = &self.selfcheck {
            let _ = writeln!(out, "counterarguments:");
            for (i, c) in sc.counterarguments.iter().enumerate() {
                let _ = writeln!(out, "  {}. {c}", i + 1);
            }
        }
        if let Some(at) = self.closed_at {
            let _ = writeln!(out, "{}  closed", at.to_rfc3339());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(min: i64) -> Timestamp {
        let base: Timestamp = "2026-03-02T09:00:00Z".parse().unwrap();
        base + chrono::Duration::minutes(min)
    }

    fn session() -> CoProductionSession {
        CoProductionSession::start("s1".into(), "consultant".into(), t(0), 25).unwrap()
    }

    #[test]
    fn interval_bounds() {
        assert_eq!(
            CoProductionSession::start("s".into(), "o".into(), t(0), 20),
            Err(SessionError::Interval(20))
        );
        CoProductionSession::start("s".into(), "o".into(), t(0), 30).unwrap();
    }

    #[test]
    fn due_after_interval() {
        let s = session();
        assert!(s.checkpoint_due(t(26)).unwrap());
        assert!(!s.checkpoint_due(t(10)).unwrap());
    }

    #[test]
    fn recent_checkpoint_not_due() {
        let mut s = session();
        s.record_checkpoint(t(20), "scope is the EU market", true).unwrap();
        assert!(!s.checkpoint_due(t(25)).unwrap());
    }

    #[test]
    fn significant_pivot_makes_checkpoint_due() {
        let mut s = session();
        s.record_checkpoint(t(5), "framing", true).unwrap();
        s.log_pivot(t(6), "switch to a pricing-led strategy", true, true)
            .unwrap();
        assert!(s.checkpoint_due(t(6)).unwrap());
    }

    #[test]
    fn rejected_pivot_needs_no_review() {
        let mut s = session();
        s.log_pivot(t(3), "drop the SMB segment", false, false).unwrap();
        assert!(s.pending_merit_reviews().is_empty());
        s.log_pivot(t(4), "add a partner channel", true, false).unwrap();
        assert_eq!(s.pending_merit_reviews().len(), 1);
    }

    #[test]
    fn finalize_blocks() {
        let mut s = session();
        s.log_pivot(t(3), "reframe around churn", true, false).unwrap();
        let two = vec!["a".to_string(), "b".to_string()];
        let err = s.finalize(t(60), two).unwrap_err();
        let SessionError::Blocked(blockers) = err else {
            panic!("expected block")
        };
        assert!(blockers.contains(&FinalizeBlocker::Counterarguments { have: 2, need: 3 }));
        assert!(blockers.contains(&FinalizeBlocker::UnreviewedPivot { pivot_id: 1 }));
        assert!(!s.is_closed());

        s.review_pivot(1, "supported by the churn data, not just fluent").unwrap();
        s.finalize(t(61), vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert!(s.is_closed());
        assert_eq!(s.checkpoint_due(t(90)), Err(SessionError::Closed("s1".into())));
    }

    #[test]
    fn late_checkpoint_recorded_not_refused() {
        let mut s = session();
        let c = s.record_checkpoint(t(40), "late", true).unwrap();
        assert_eq!(c.overdue_minutes, Some(10));
        assert_eq!(s.missed_checkpoints().count(), 1);
        assert!(s.transcript().contains("late by 10 min"));
    }

    #[test]
    fn blank_counterargument_blocks() {
        let mut s = session();
        let err = s
            .finalize(t(30), vec!["a".into(), " ".into(), "c".into()])
            .unwrap_err();
        assert_eq!(
            err,
            SessionError::Blocked(vec![FinalizeBlocker::EmptyCounterargument { index: 1 }])
        );
    }
}
