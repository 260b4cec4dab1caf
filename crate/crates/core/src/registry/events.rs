//! Registry event envelope and payloads.

use serde::{Deserialize, Serialize};

use crate::coproduction::DEFAULT_INTERVAL_MINUTES;
use crate::governance::{Assessment, CapabilityRating, MatchedRule, Tier, TransitionEvent};
use crate::ids::{CampaignId, ItemId, PersonId, SessionId, SprintId, TaskTypeId, Timestamp};
use crate::planning::ItemStatus;
use crate::quality::sampling::SamplingChange;
use crate::quality::{ChecklistDomain, PlantedError, ValidationOutcome};

pub const LOG_SCHEMA: &str = "tiergate.registry";
pub const LOG_SCHEMA_VERSION: u32 = 1;

/// First line of every log file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub schema: String,
    pub schema_version: u32,
}

impl Default for LogHeader {
    fn default() -> Self {
        Self {
            schema: LOG_SCHEMA.to_string(),
            schema_version: LOG_SCHEMA_VERSION,
        }
    }
}

/// One appended record. The store assigns `event_id`; the caller supplies
/// the timestamp, which is recorded verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEvent {
    pub event_id: u64,
    pub timestamp: Timestamp,
    pub actor: PersonId,
    #[serde(flatten)]
    pub body: EventBody,
}

impl RegistryEvent {
    pub fn kind(&self) -> EventKind {
        self.body.kind()
    }

    /// Canonical single-line form used in the log.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("registry events always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    TaskTypeRegistered(TaskTypeRegistered),
    ItemClassified(ItemClassified),
    OwnerAssigned(OwnerAssigned),
    OutcomeRecorded(ValidationOutcome),
    TransitionApplied(TransitionEvent),
    ProvenanceRecorded(ProvenanceRecord),
    ViolationNoted(ViolationNoted),
    HumanOnlyCycleCompleted(HumanOnlyCycleCompleted),
    InjectionPlanted(InjectionPlanted),
    InjectionResolved(InjectionResolved),
    SessionEvent(SessionEvent),
    ItemStatusChanged(ItemStatusChanged),
    IntegrationVerified(IntegrationVerified),
    DeficienciesSettled(DeficienciesSettled),
    SamplingAdjusted(SamplingAdjusted),
    CycleClosed(CycleClosed),
    DemotionPrompted(DemotionPrompted),
    RatingDowngraded(RatingDowngraded),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TaskTypeRegistered,
    ItemClassified,
    OwnerAssigned,
    OutcomeRecorded,
    TransitionApplied,
    ProvenanceRecorded,
    ViolationNoted,
    HumanOnlyCycleCompleted,
    InjectionPlanted,
    InjectionResolved,
    SessionEvent,
    ItemStatusChanged,
    IntegrationVerified,
    DeficienciesSettled,
    SamplingAdjusted,
    CycleClosed,
    DemotionPrompted,
    RatingDowngraded,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::TaskTypeRegistered => "task_type_registered",
            EventKind::ItemClassified => "item_classified",
            EventKind::OwnerAssigned => "owner_assigned",
            EventKind::OutcomeRecorded => "outcome_recorded",
            EventKind::TransitionApplied => "transition_applied",
            EventKind::ProvenanceRecorded => "provenance_recorded",
            EventKind::ViolationNoted => "violation_noted",
            EventKind::HumanOnlyCycleCompleted => "human_only_cycle_completed",
            EventKind::InjectionPlanted => "injection_planted",
            EventKind::InjectionResolved => "injection_resolved",
            EventKind::SessionEvent => "session_event",
            EventKind::ItemStatusChanged => "item_status_changed",
            EventKind::IntegrationVerified => "integration_verified",
            EventKind::DeficienciesSettled => "deficiencies_settled",
            EventKind::SamplingAdjusted => "sampling_adjusted",
            EventKind::CycleClosed => "cycle_closed",
            EventKind::DemotionPrompted => "demotion_prompted",
            EventKind::RatingDowngraded => "rating_downgraded",
        }
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| format!("unknown event kind {s:?}"))
    }
}

impl EventBody {
    pub fn kind(&self) -> EventKind {
        match self {
            EventBody::TaskTypeRegistered(_) => EventKind::TaskTypeRegistered,
            EventBody::ItemClassified(_) => EventKind::ItemClassified,
            EventBody::OwnerAssigned(_) => EventKind::OwnerAssigned,
            EventBody::OutcomeRecorded(_) => EventKind::OutcomeRecorded,
            EventBody::TransitionApplied(_) => EventKind::TransitionApplied,
            EventBody::ProvenanceRecorded(_) => EventKind::ProvenanceRecorded,
            EventBody::ViolationNoted(_) => EventKind::ViolationNoted,
            EventBody::HumanOnlyCycleCompleted(_) => EventKind::HumanOnlyCycleCompleted,
            EventBody::InjectionPlanted(_) => EventKind::InjectionPlanted,
            EventBody::InjectionResolved(_) => EventKind::InjectionResolved,
            EventBody::SessionEvent(_) => EventKind::SessionEvent,
            EventBody::ItemStatusChanged(_) => EventKind::ItemStatusChanged,
            EventBody::IntegrationVerified(_) => EventKind::IntegrationVerified,
            EventBody::DeficienciesSettled(_) => EventKind::DeficienciesSettled,
            EventBody::SamplingAdjusted(_) => EventKind::SamplingAdjusted,
            EventBody::CycleClosed(_) => EventKind::CycleClosed,
            EventBody::DemotionPrompted(_) => EventKind::DemotionPrompted,
            EventBody::RatingDowngraded(_) => EventKind::RatingDowngraded,
        }
    }
}

/// A new task type. `assessment.capability` is the starting rating; anything
/// above Unproven needs an evidence note describing prior track record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTypeRegistered {
    pub task_type_id: TaskTypeId,
    pub name: String,
    pub checklist_domain: ChecklistDomain,
    pub assessment: Assessment,
    pub default_tier: Tier,
    pub matched_rule: MatchedRule,
    pub tier: Tier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_evidence: Option<String>,
    /// Starting Tier 3 sampling rate, taken from configuration.
    pub initial_sampling_rate: f64,
}

/// Classification of one backlog item at planning.
///
/// `default_tier` is what the matrix yields for `assessment`; a different
/// `tier` is a recorded human decision and needs `override_rationale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemClassified {
    pub item_id: ItemId,
    pub title: String,
    pub task_type_id: TaskTypeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprint: Option<SprintId>,
    pub assessment: Assessment,
    pub default_tier: Tier,
    pub matched_rule: MatchedRule,
    pub tier: Tier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<PersonId>,
    pub baseline_effort: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnerAssigned {
    pub item_id: ItemId,
    pub owner: PersonId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Producer {
    Human,
    AiSystem { system_id: String },
    Hybrid { system_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceRecord {
    pub item_id: ItemId,
    pub producer: Producer,
    /// Model or tool identifier and version.
    #[serde(default)]
    pub tool: String,
    #[serde(default)]
    pub generation_context: String,
    pub validated_by: PersonId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationNoted {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub person: Option<PersonId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type_id: Option<TaskTypeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanOnlyCycleCompleted {
    pub task_type_id: TaskTypeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionPlanted {
    pub campaign_id: CampaignId,
    pub owner: PersonId,
    pub planted: Vec<PlantedError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionResolved {
    pub campaign_id: CampaignId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionEvent {
    pub session_id: SessionId,
    pub action: SessionAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum SessionAction {
    Started {
        owner: PersonId,
        at: Timestamp,
        #[serde(default = "default_interval")]
        checkpoint_interval_minutes: u32,
    },
    Checkpoint {
        at: Timestamp,
        regrounding_note: String,
        unassisted: bool,
    },
    Pivot {
        at: Timestamp,
        ai_suggestion: String,
        adopted: bool,
        #[serde(default)]
        significant: bool,
    },
    PivotReviewed {
        pivot_id: u32,
        merit_note: String,
    },
    Finalized {
        at: Timestamp,
        counterarguments: Vec<String>,
    },
}

fn default_interval() -> u32 {
    DEFAULT_INTERVAL_MINUTES
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemStatusChanged {
    pub item_id: ItemId,
    pub status: ItemStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationVerified {
    pub item_id: ItemId,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Settlement {
    Resolved,
    AcceptedRisk,
}

/// Closes out the findings on an item's latest review, either fixed or
/// documented as accepted risk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeficienciesSettled {
    pub item_id: ItemId,
    pub resolution: Settlement,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingAdjusted {
    pub task_type_id: TaskTypeId,
    pub change: SamplingChange,
}

/// Closes the current cycle: per-type summaries are folded into each
/// evidence ledger and erosion counters advance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleClosed {
    pub cycle: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemotionPrompted {
    pub task_type_id: TaskTypeId,
    pub item_id: ItemId,
    pub reason: String,
}

/// Manual downgrade of a task type's capability rating. When the lower
/// rating classifies below the current tier, `reclassified_tier` records
/// the new tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingDowngraded {
    pub task_type_id: TaskTypeId,
    pub from: CapabilityRating,
    pub to: CapabilityRating,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reclassified_tier: Option<Tier>,
    pub rationale: String,
}
