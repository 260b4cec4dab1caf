//! Append-only delegation registry.
//!
//! Every classification, owner, outcome, transition, provenance record and
//! process violation is an event. State is never stored directly: the
//! snapshot is rebuilt by folding the log, and the [`Registry`] writer is
//! the only way to extend it.

pub mod events;
pub mod export;
pub mod query;
pub mod snapshot;
pub mod store;

use events::{EventBody, RegistryEvent};
use snapshot::{RegistrySnapshot, SchemaError};
use store::{parse_log, CorruptLine, EventStore, StoreError};

use crate::ids::{PersonId, Timestamp};

pub use events::EventKind;
pub use query::{query, QueryFilter, QueryResult};
pub use snapshot::TaskTypeRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Skip unreadable or invalid events and report them instead of halting.
    pub skip_corrupt: bool,
}

/// An event that could not be replayed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayIssue {
    #[error(transparent)]
    Unreadable(#[from] CorruptLine),
    #[error("event {event_id} rejected: {reason}")]
    Invalid { event_id: u64, reason: String },
}

impl ReplayIssue {
    pub fn event_id(&self) -> Option<u64> {
        match self {
            ReplayIssue::Unreadable(c) => c.event_id,
            ReplayIssue::Invalid { event_id, .. } => Some(*event_id),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("schema violation: {0}")]
    Schema(#[from] SchemaError),
    #[error("store unavailable: {0}")]
    Store(#[from] StoreError),
    #[error("corrupt registry: {0}")]
    Corrupt(ReplayIssue),
}

impl RegistryError {
    /// Event id of the first corrupt event, when replay halted on one.
    pub fn corrupt_event_id(&self) -> Option<u64> {
        match self {
            RegistryError::Corrupt(issue) => issue.event_id(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replayed {
    pub events: Vec<RegistryEvent>,
    pub snapshot: RegistrySnapshot,
    pub skipped: Vec<ReplayIssue>,
}

/// Fold parsed events into a snapshot.
///
/// With `skip_corrupt`, a skipped event's id is still consumed so that later
/// events keep their ids.
pub fn replay_events(
    parsed: Vec<Result<RegistryEvent, CorruptLine>>,
    opts: ReplayOptions,
) -> Result<Replayed, RegistryError> {
    let mut snapshot = RegistrySnapshot::default();
    let mut events = Vec::with_capacity(parsed.len());
    let mut skipped = Vec::new();
    for p in parsed {
        let issue = match p {
            Ok(e) => match snapshot.validate(&e) {
                Ok(()) => {
                    snapshot.fold(&e);
                    events.push(e);
                    continue;
                }
                Err(err) => ReplayIssue::Invalid {
                    event_id: e.event_id,
                    reason: err.to_string(),
                },
            },
            Err(c) => ReplayIssue::Unreadable(c),
        };
        if !opts.skip_corrupt {
            return Err(RegistryError::Corrupt(issue));
        }
        if let Some(id) = issue.event_id().filter(|id| *id > snapshot.last_event_id) {
            snapshot.last_event_id = id;
        }
        skipped.push(issue);
    }
    Ok(Replayed {
        events,
        snapshot,
        skipped,
    })
}

/// Replay log text (header line plus events).
pub fn replay(text: &str, opts: ReplayOptions) -> Result<Replayed, RegistryError> {
    replay_events(parse_log(text)?, opts)
}

/// Serialize events as log text.
pub fn to_log_text(events: &[RegistryEvent]) -> String {
    let mut s = store::header_line();
    s.push('\n');
    for e in events {
        s.push_str(&e.to_line());
        s.push('\n');
    }
    s
}

/// The single writer: validates each event against the current snapshot,
/// assigns the next id, persists it, then folds it in.
pub struct Registry {
    store: Box<dyn EventStore>,
    events: Vec<RegistryEvent>,
    snapshot: RegistrySnapshot,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("events", &self.events.len())
            .field("last_event_id", &self.snapshot.last_event_id)
            .finish()
    }
}

impl Registry {
    pub fn open(store: Box<dyn EventStore>, opts: ReplayOptions) -> Result<Self, RegistryError> {
        let r = replay(&store.read_all()?, opts)?;
        Ok(Self {
            store,
            events: r.events,
            snapshot: r.snapshot,
        })
    }

    pub fn in_memory() -> Self {
        Self {
            store: Box::new(store::MemoryStore::new()),
            events: Vec::new(),
            snapshot: RegistrySnapshot::default(),
        }
    }

    pub fn snapshot(&self) -> &RegistrySnapshot {
        &self.snapshot
    }

    pub fn events(&self) -> &[RegistryEvent] {
        &self.events
    }

    /// Build the event that `append` would write, without writing it.
    pub fn prepare(&self, timestamp: Timestamp, actor: &PersonId, body: EventBody) -> RegistryEvent {
        RegistryEvent {
            event_id: self.snapshot.last_event_id + 1,
            timestamp,
            actor: actor.clone(),
            body,
        }
    }

    /// Check an event body against the current state.
    pub fn check(&self, timestamp: Timestamp, actor: &PersonId, body: &EventBody) -> Result<(), SchemaError> {
        self.snapshot.validate(&self.prepare(timestamp, actor, body.clone()))
    }

    /// Append one event; returns its id once durable.
    pub fn append(&mut self, timestamp: Timestamp, actor: &PersonId, body: EventBody) -> Result<u64, RegistryError> {
        let event = self.prepare(timestamp, actor, body);
        self.snapshot.validate(&event)?;
        self.store.append(&event)?;
        self.snapshot.fold(&event);
        let id = event.event_id;
        self.events.push(event);
        Ok(id)
    }

    /// Events with ids greater than `after`.
    pub fn events_after(&self, after: u64) -> &[RegistryEvent] {
        let start = self.events.partition_point(|e| e.event_id <= after);
        &self.events[start..]
    }
}
