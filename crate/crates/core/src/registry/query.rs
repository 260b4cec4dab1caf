//! Filtered views over the registry history.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::events::EventKind;
use super::snapshot::{EventRef, RegistrySnapshot};
use crate::governance::Tier;
use crate::ids::{ItemId, PersonId, SprintId, TaskTypeId};

/// Conjunction of optional criteria. Parsed from `key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<TaskTypeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprint: Option<SprintId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<PersonId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<EventKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<u32>,
}

pub const FILTER_KEYS: [&str; 7] = ["task_type", "sprint", "owner", "kind", "tier", "item", "cycle"];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown filter key {0:?}; expected one of {}", FILTER_KEYS.join(", "))]
    UnknownKey(String),
    #[error("filter {0:?} is not of the form key=value")]
    Malformed(String),
    #[error("bad value for {key}: {reason}")]
    BadValue { key: String, reason: String },
}

impl QueryFilter {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), QueryError> {
        let bad = |reason: String| QueryError::BadValue {
            key: key.to_string(),
            reason,
        };
        match key.trim() {
            "task_type" => self.task_type = Some(value.into()),
            "sprint" => self.sprint = Some(value.into()),
            "owner" => self.owner = Some(value.into()),
            "item" => self.item = Some(value.into()),
            "kind" => self.kind = Some(value.parse().map_err(bad)?),
            "tier" => self.tier = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            "cycle" => self.cycle = Some(value.trim().parse().map_err(|e| bad(format!("{e}")))?),
            other => return Err(QueryError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parse `key=value` terms.
    pub fn parse<'a>(terms: impl IntoIterator<Item = &'a str>) -> Result<Self, QueryError> {
        let mut f = Self::default();
        for t in terms {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| QueryError::Malformed(t.to_string()))?;
            f.set(k, v)?;
        }
        Ok(f)
    }

    pub fn matches(&self, r: &EventRef) -> bool {
        fn eq<T: PartialEq>(want: &Option<T>, got: &Option<T>) -> bool {
            want.as_ref().map_or(true, |w| got.as_ref() == Some(w))
        }
        eq(&self.task_type, &r.task_type_id)
            && eq(&self.sprint, &r.sprint)
            && eq(&self.owner, &r.owner)
            && eq(&self.tier, &r.tier)
            && eq(&self.item, &r.item_id)
            && self.kind.map_or(true, |k| k == r.kind)
            && self.cycle.map_or(true, |c| c == r.cycle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    /// Matching events in event-id order.
    pub events: Vec<EventRef>,
    /// Distinct items the matching events refer to.
    pub items: Vec<ItemId>,
}

pub fn query(snapshot: &RegistrySnapshot, filter: &QueryFilter) -> QueryResult {
    let events: Vec<EventRef> = snapshot
        .history
        .iter()
        .filter(|r| filter.matches(r))
        .cloned()
        .collect();
    let items: BTreeSet<ItemId> = events.iter().filter_map(|r| r.item_id.clone()).collect();
    QueryResult {
        events,
        items: items.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_rejected() {
        assert_eq!(
            QueryFilter::parse(["colour=red"]),
            Err(QueryError::UnknownKey("colour".into()))
        );
        assert!(matches!(QueryFilter::parse(["tier"]), Err(QueryError::Malformed(_))));
    }

    #[test]
    fn parses_known_keys() {
        let f = QueryFilter::parse(["tier=tier3", "kind=violation_noted"]).unwrap();
        assert_eq!(f.tier, Some(Tier::Tier3));
        assert_eq!(f.kind, Some(EventKind::ViolationNoted));
    }

    #[test]
    fn empty_snapshot_yields_nothing() {
        let f = QueryFilter::parse(["owner=nobody"]).unwrap();
        let r = query(&RegistrySnapshot::default(), &f);
        assert!(r.events.is_empty() && r.items.is_empty());
    }
}
