//! Current registry state as a pure fold over the event log.
//!
//! `validate` checks an event against the state it would be applied to and
//! never mutates; `fold` applies an already-validated event and never fails.
//! Checks that depend on team configuration (promotion eligibility, rating
//! derivation) happen in the engine before an event is appended, so replay
//! does not depend on the config in force at replay time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::events::*;
use crate::coproduction::{CoProductionSession, SessionError};
use crate::governance::{
    classify, derive_capability_rating, Assessment, CapabilityRating, EvidenceLedger, LedgerError,
    MatchedRule, Tier, TransitionEvent, TransitionKind, TransitionPolicy,
};
use crate::ids::{CampaignId, ItemId, PersonId, SessionId, SprintId, TaskTypeId, Timestamp};
use crate::planning::dod::dod_check_with;
use crate::planning::ItemStatus;
use crate::quality::injection::InjectionError;
use crate::quality::metrics::summary_for_cycle;
use crate::quality::outcome::OutcomeError;
use crate::quality::sampling::{SamplingBasis, SamplingPlan};
use crate::quality::{ChecklistDomain, ChecklistSet, InjectionCampaign, ValidationOutcome};

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTypeRecord {
    pub task_type_id: TaskTypeId,
    pub name: String,
    pub checklist_domain: ChecklistDomain,
    /// S, V and C as assessed; `capability` holds the registration rating.
    pub assessment: Assessment,
    pub tier: Tier,
    /// Tier when the current cycle opened; ledger entries use this.
    pub cycle_start_tier: Tier,
    /// Lowest rating the type holds regardless of evidence: the registration
    /// rating, or the target of the latest manual downgrade.
    pub rating_floor: CapabilityRating,
    /// Cycles up to and including this index no longer count toward the
    /// derived rating (set by a manual downgrade).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_evidence_after: Option<u32>,
    pub ledger: EvidenceLedger,
    pub sampling: SamplingPlan,
    pub cycles_since_human_only: u32,
    pub human_only_cycles: Vec<u32>,
    pub registered_cycle: u32,
}

impl TaskTypeRecord {
    /// Rating used for classification: the floor, raised by clean evidence
    /// gathered since the last manual downgrade.
    pub fn effective_rating(&self, policy: &TransitionPolicy) -> CapabilityRating {
        let derived = match self.rating_evidence_after {
            None => derive_capability_rating(&self.ledger, policy),
            Some(after) => {
                let recent: Vec<_> = self
                    .ledger
                    .cycles()
                    .iter()
                    .filter(|c| c.cycle_index > after)
                    .cloned()
                    .collect();
                let ledger = EvidenceLedger::from_cycles(recent)
                    .expect("a suffix of a valid ledger is valid");
                derive_capability_rating(&ledger, policy)
            }
        };
        self.rating_floor.max(derived)
    }

    pub fn current_assessment(&self, policy: &TransitionPolicy) -> Assessment {
        Assessment {
            capability: self.effective_rating(policy),
            ..self.assessment
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
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
    /// Owner named by the latest owner_assigned event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confirmed_owner: Option<PersonId>,
    pub baseline_effort: f64,
    pub status: ItemStatus,
    pub classified_cycle: u32,
    pub integration_verified: bool,
    /// Event id of the latest settlement of review findings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settled: Option<SettlementRecord>,
    /// Planted by an open injection campaign; reviewers are not told.
    pub hidden_from_reviewer: bool,
}

impl ItemRecord {
    pub fn is_open(&self) -> bool {
        self.status != ItemStatus::Done
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementRecord {
    pub event_id: u64,
    pub resolution: Settlement,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedOutcome {
    pub event_id: u64,
    pub cycle: u32,
    pub task_type_id: TaskTypeId,
    pub item_tier: Tier,
    pub outcome: ValidationOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub event_id: u64,
    pub cycle: u32,
    pub timestamp: Timestamp,
    pub reported_by: PersonId,
    pub violation: ViolationNoted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub event_id: u64,
    pub cycle: u32,
    pub prompt: DemotionPrompted,
}

/// Metadata the board always shows. Violations cannot be filtered out.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardMetadata {
    pub violations: Vec<ViolationRecord>,
}

/// Query index entry: the attributes of one event that filters match on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRef {
    pub event_id: u64,
    pub kind: EventKind,
    pub cycle: u32,
    pub actor: PersonId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type_id: Option<TaskTypeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprint: Option<SprintId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<PersonId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub schema_version: u32,
    pub last_event_id: u64,
    pub current_cycle: u32,
    pub task_types: BTreeMap<TaskTypeId, TaskTypeRecord>,
    pub items: BTreeMap<ItemId, ItemRecord>,
    pub outcomes: Vec<RecordedOutcome>,
    pub transitions: Vec<TransitionEvent>,
    pub provenance: BTreeMap<ItemId, ProvenanceRecord>,
    pub board: BoardMetadata,
    pub campaigns: BTreeMap<CampaignId, InjectionCampaign>,
    pub sessions: BTreeMap<SessionId, CoProductionSession>,
    pub demotion_prompts: Vec<PromptRecord>,
    pub history: Vec<EventRef>,
}

impl Default for RegistrySnapshot {
    fn default() -> Self {
        Self {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            last_event_id: 0,
            current_cycle: 1,
            task_types: BTreeMap::new(),
            items: BTreeMap::new(),
            outcomes: Vec::new(),
            transitions: Vec::new(),
            provenance: BTreeMap::new(),
            board: BoardMetadata::default(),
            campaigns: BTreeMap::new(),
            sessions: BTreeMap::new(),
            demotion_prompts: Vec::new(),
            history: Vec::new(),
        }
    }
}

/// Why an event cannot be appended to the current state.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SchemaError {
    #[error("event has no actor")]
    BlankActor,
    #[error("{0} must not be empty")]
    EmptyField(&'static str),
    #[error("event id {got} does not follow {last}")]
    EventId { last: u64, got: u64 },
    #[error("task type {0} is already registered")]
    DuplicateTaskType(TaskTypeId),
    #[error("unknown task type {0}")]
    UnknownTaskType(TaskTypeId),
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("recorded default tier {recorded} differs from the matrix result {computed}")]
    DefaultTierMismatch { recorded: Tier, computed: Tier },
    #[error("recorded matched rule differs from the matrix result")]
    MatchedRuleMismatch,
    #[error("tier {tier} differs from the matrix default {default}; an override rationale is required")]
    MissingOverrideRationale { default: Tier, tier: Tier },
    #[error("registration rating {0} above Unproven needs baseline evidence")]
    MissingBaselineEvidence(CapabilityRating),
    #[error("item {item} at {tier} exceeds task type tier {type_tier}")]
    TierAboveTaskType {
        item: ItemId,
        tier: Tier,
        type_tier: Tier,
    },
    #[error("item {0} is at Tier 2 or above and needs a named owner")]
    MissingOwner(ItemId),
    #[error("item {0} has non-positive baseline effort")]
    NonPositiveBaseline(ItemId),
    #[error("item {0} is done and cannot change")]
    ItemClosed(ItemId),
    #[error("item {item} cannot be marked done: {}", unmet.join(", "))]
    NotDoneEligible { item: ItemId, unmet: Vec<String> },
    #[error("item {0} cannot return to planned")]
    StatusRegression(ItemId),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error("transition for {task_type}: expected from tier {expected}, got {got}")]
    StaleTransition {
        task_type: TaskTypeId,
        expected: Tier,
        got: Tier,
    },
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("event targets cycle {got}; current cycle is {current}")]
    CycleMismatch { current: u32, got: u32 },
    #[error(transparent)]
    Injection(#[from] InjectionError),
    #[error("unknown campaign {0}")]
    UnknownCampaign(CampaignId),
    #[error("campaign {0} already exists")]
    DuplicateCampaign(CampaignId),
    #[error("item {0} is already planted in an open campaign")]
    AlreadyPlanted(ItemId),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("session {0} already exists")]
    DuplicateSession(SessionId),
    #[error("{0} already has an open co-production session")]
    OpenSessionExists(PersonId),
    #[error("accepting risk on {0} requires a note")]
    AcceptedRiskNote(ItemId),
    #[error("sampling change starts from {from}, but the current rate is {current}")]
    SamplingRateMismatch { current: f64, from: f64 },
    #[error("sampling rate {0} outside (0, 1]")]
    SamplingRate(f64),
    #[error("rating change {from} -> {to} is not a downgrade")]
    NotADowngrade {
        from: CapabilityRating,
        to: CapabilityRating,
    },
    #[error("reclassified tier should be {expected:?}, event says {got:?}")]
    ReclassificationMismatch {
        expected: Option<Tier>,
        got: Option<Tier>,
    },
    #[error("item {0} is not AI-restricted; human-only cycles run on AI-restricted items")]
    NotHumanOnlyItem(ItemId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

fn nonblank(s: &str, field: &'static str) -> Result<(), SchemaError> {
    if s.trim().is_empty() {
        Err(SchemaError::EmptyField(field))
    } else {
        Ok(())
    }
}

fn check_classification(
    assessment: &Assessment,
    default_tier: Tier,
    matched_rule: &MatchedRule,
    tier: Tier,
    rationale: Option<&str>,
) -> Result<(), SchemaError> {
    let c = classify(assessment);
    if c.tier != default_tier {
        return Err(SchemaError::DefaultTierMismatch {
            recorded: default_tier,
            computed: c.tier,
        });
    }
    if &c.matched_rule != matched_rule {
        return Err(SchemaError::MatchedRuleMismatch);
    }
    if tier != default_tier && rationale.map_or(true, |r| r.trim().is_empty()) {
        return Err(SchemaError::MissingOverrideRationale {
            default: default_tier,
            tier,
        });
    }
    Ok(())
}

/// Tier a type drops to when its rating is lowered to `to`, if lower than now.
pub fn reclassified_tier(record: &TaskTypeRecord, to: CapabilityRating) -> Option<Tier> {
    let tier = classify(&Assessment {
        capability: to,
        ..record.assessment
    })
    .tier;
    (tier < record.tier).then_some(tier)
}

impl RegistrySnapshot {
    pub fn task_type(&self, id: &TaskTypeId) -> Result<&TaskTypeRecord, SchemaError> {
        self.task_types
            .get(id)
            .ok_or_else(|| SchemaError::UnknownTaskType(id.clone()))
    }

    pub fn item(&self, id: &ItemId) -> Result<&ItemRecord, SchemaError> {
        self.items
            .get(id)
            .ok_or_else(|| SchemaError::UnknownItem(id.clone()))
    }

    pub fn outcomes_for<'a>(&'a self, item: &'a ItemId) -> impl Iterator<Item = &'a RecordedOutcome> {
        self.outcomes.iter().filter(move |o| &o.outcome.item_id == item)
    }

    /// Canonical serialization; equal snapshots give equal strings.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("snapshots always serialize")
    }

    /// Check that `event` may be appended to this state.
    pub fn validate(&self, event: &RegistryEvent) -> Result<(), SchemaError> {
        if event.actor.is_blank() {
            return Err(SchemaError::BlankActor);
        }
        if event.event_id != self.last_event_id + 1 {
            return Err(SchemaError::EventId {
                last: self.last_event_id,
                got: event.event_id,
            });
        }
        match &event.body {
            EventBody::TaskTypeRegistered(p) => {
                if self.task_types.contains_key(&p.task_type_id) {
                    return Err(SchemaError::DuplicateTaskType(p.task_type_id.clone()));
                }
                nonblank(p.task_type_id.as_str(), "task_type_id")?;
                nonblank(&p.name, "name")?;
                check_classification(
                    &p.assessment,
                    p.default_tier,
                    &p.matched_rule,
                    p.tier,
                    p.override_rationale.as_deref(),
                )?;
                if p.assessment.capability > CapabilityRating::Unproven
                    && p.baseline_evidence.as_deref().map_or(true, |e| e.trim().is_empty())
                {
                    return Err(SchemaError::MissingBaselineEvidence(p.assessment.capability));
                }
                if !(p.initial_sampling_rate > 0.0 && p.initial_sampling_rate <= 1.0) {
                    return Err(SchemaError::SamplingRate(p.initial_sampling_rate));
                }
            }
            EventBody::ItemClassified(p) => {
                nonblank(p.item_id.as_str(), "item_id")?;
                nonblank(&p.title, "title")?;
                let tt = self.task_type(&p.task_type_id)?;
                if let Some(existing) = self.items.get(&p.item_id) {
                    if !existing.is_open() {
                        return Err(SchemaError::ItemClosed(p.item_id.clone()));
                    }
                }
                if !(p.baseline_effort.is_finite() && p.baseline_effort > 0.0) {
                    return Err(SchemaError::NonPositiveBaseline(p.item_id.clone()));
                }
                check_classification(
                    &p.assessment,
                    p.default_tier,
                    &p.matched_rule,
                    p.tier,
                    p.override_rationale.as_deref(),
                )?;
                if p.tier > tt.tier {
                    return Err(SchemaError::TierAboveTaskType {
                        item: p.item_id.clone(),
                        tier: p.tier,
                        type_tier: tt.tier,
                    });
                }
                let owner = p
                    .owner
                    .as_ref()
                    .or_else(|| self.items.get(&p.item_id).and_then(|i| i.owner.as_ref()));
                if p.tier.requires_owner() && owner.map_or(true, PersonId::is_blank) {
                    return Err(SchemaError::MissingOwner(p.item_id.clone()));
                }
            }
            EventBody::OwnerAssigned(p) => {
                let item = self.item(&p.item_id)?;
                if !item.is_open() {
                    return Err(SchemaError::ItemClosed(p.item_id.clone()));
                }
                if p.owner.is_blank() {
                    return Err(SchemaError::EmptyField("owner"));
                }
            }
            EventBody::OutcomeRecorded(o) => {
                let item = self.item(&o.item_id)?;
                if item.tier == Tier::AiRestricted {
                    return Err(OutcomeError::RestrictedItem(o.item_id.clone()).into());
                }
                o.validate_for_tier(item.tier)?;
            }
            EventBody::TransitionApplied(t) => self.validate_transition(t)?,
            EventBody::ProvenanceRecorded(p) => {
                self.item(&p.item_id)?;
                if p.validated_by.is_blank() {
                    return Err(SchemaError::EmptyField("validated_by"));
                }
                match &p.producer {
                    Producer::Human => {}
                    Producer::AiSystem { system_id } | Producer::Hybrid { system_id } => {
                        nonblank(system_id, "producer.system_id")?
                    }
                }
            }
            EventBody::ViolationNoted(p) => {
                nonblank(&p.description, "description")?;
                if let Some(t) = &p.task_type_id {
                    self.task_type(t)?;
                }
                if let Some(i) = &p.item_id {
                    self.item(i)?;
                }
            }
            EventBody::HumanOnlyCycleCompleted(p) => {
                self.task_type(&p.task_type_id)?;
                if let Some(i) = &p.item_id {
                    if self.item(i)?.tier != Tier::AiRestricted {
                        return Err(SchemaError::NotHumanOnlyItem(i.clone()));
                    }
                }
            }
            EventBody::InjectionPlanted(p) => {
                if self.campaigns.contains_key(&p.campaign_id) {
                    return Err(SchemaError::DuplicateCampaign(p.campaign_id.clone()));
                }
                if p.owner.is_blank() {
                    return Err(SchemaError::EmptyField("owner"));
                }
                InjectionCampaign::new(p.campaign_id.clone(), p.owner.clone(), p.planted.clone())?;
                for pe in &p.planted {
                    if self.item(&pe.item_id)?.hidden_from_reviewer {
                        return Err(SchemaError::AlreadyPlanted(pe.item_id.clone()));
                    }
                }
            }
            EventBody::InjectionResolved(p) => {
                let c = self
                    .campaigns
                    .get(&p.campaign_id)
                    .ok_or_else(|| SchemaError::UnknownCampaign(p.campaign_id.clone()))?;
                if c.closed {
                    return Err(InjectionError::Closed(p.campaign_id.clone()).into());
                }
            }
            EventBody::SessionEvent(p) => {
                self.apply_session(p)?;
            }
            EventBody::ItemStatusChanged(p) => {
                let item = self.item(&p.item_id)?;
                if !item.is_open() {
                    return Err(SchemaError::ItemClosed(p.item_id.clone()));
                }
                if p.status == ItemStatus::Planned && item.status != ItemStatus::Planned {
                    return Err(SchemaError::StatusRegression(p.item_id.clone()));
                }
                if p.status == ItemStatus::Done {
                    let dod = dod_check_with(&p.item_id, self, ChecklistSet::bundled())
                        .expect("item existence checked above");
                    if !dod.is_done_eligible() {
                        return Err(SchemaError::NotDoneEligible {
                            item: p.item_id.clone(),
                            unmet: dod.unmet().into_iter().map(str::to_string).collect(),
                        });
                    }
                }
            }
            EventBody::IntegrationVerified(p) => {
                self.item(&p.item_id)?;
            }
            EventBody::DeficienciesSettled(p) => {
                self.item(&p.item_id)?;
                if p.resolution == Settlement::AcceptedRisk && p.note.trim().is_empty() {
                    return Err(SchemaError::AcceptedRiskNote(p.item_id.clone()));
                }
            }
            EventBody::SamplingAdjusted(p) => {
                let tt = self.task_type(&p.task_type_id)?;
                let ch = &p.change;
                if ch.cycle != self.current_cycle {
                    return Err(SchemaError::CycleMismatch {
                        current: self.current_cycle,
                        got: ch.cycle,
                    });
                }
                if (ch.from - tt.sampling.rate).abs() > 1e-9 {
                    return Err(SchemaError::SamplingRateMismatch {
                        current: tt.sampling.rate,
                        from: ch.from,
                    });
                }
                if !(ch.to > 0.0 && ch.to <= 1.0) {
                    return Err(SchemaError::SamplingRate(ch.to));
                }
                if ch.basis == SamplingBasis::DefaultStart {
                    return Err(SchemaError::InvalidTransition(
                        "sampling changes are adjustments or SQC-derived".into(),
                    ));
                }
            }
            EventBody::CycleClosed(p) => {
                if p.cycle != self.current_cycle {
                    return Err(SchemaError::CycleMismatch {
                        current: self.current_cycle,
                        got: p.cycle,
                    });
                }
                for tt in self.task_types.values() {
                    if let Some(summary) = self.closing_summary(tt) {
                        let mut ledger = tt.ledger.clone();
                        ledger.push(summary)?;
                    }
                }
            }
            EventBody::DemotionPrompted(p) => {
                self.task_type(&p.task_type_id)?;
                self.item(&p.item_id)?;
                nonblank(&p.reason, "reason")?;
            }
            EventBody::RatingDowngraded(p) => {
                let tt = self.task_type(&p.task_type_id)?;
                nonblank(&p.rationale, "rationale")?;
                if p.to >= p.from {
                    return Err(SchemaError::NotADowngrade {
                        from: p.from,
                        to: p.to,
                    });
                }
                let expected = reclassified_tier(tt, p.to);
                if expected != p.reclassified_tier {
                    return Err(SchemaError::ReclassificationMismatch {
                        expected,
                        got: p.reclassified_tier,
                    });
                }
            }
        }
        Ok(())
    }

    fn validate_transition(&self, t: &TransitionEvent) -> Result<(), SchemaError> {
        let tt = self.task_type(&t.task_type_id)?;
        if t.requested_by.is_blank() {
            return Err(SchemaError::EmptyField("requested_by"));
        }
        if t.from_tier != tt.tier {
            return Err(SchemaError::StaleTransition {
                task_type: t.task_type_id.clone(),
                expected: tt.tier,
                got: t.from_tier,
            });
        }
        if t.cycle != self.current_cycle {
            return Err(SchemaError::CycleMismatch {
                current: self.current_cycle,
                got: t.cycle,
            });
        }
        match &t.kind {
            TransitionKind::Promotion {
                approved_by,
                evidence_snapshot,
            } => {
                if approved_by.is_blank() {
                    return Err(SchemaError::EmptyField("approved_by"));
                }
                if t.from_tier.next() != Some(t.to_tier) || t.from_tier == Tier::AiRestricted {
                    return Err(SchemaError::InvalidTransition(format!(
                        "promotion must be a single step, not {} -> {}",
                        t.from_tier, t.to_tier
                    )));
                }
                if evidence_snapshot.is_empty() {
                    return Err(SchemaError::InvalidTransition(
                        "promotion carries no evidence".into(),
                    ));
                }
            }
            TransitionKind::Demotion { .. } => {
                if t.to_tier >= t.from_tier {
                    return Err(SchemaError::InvalidTransition(format!(
                        "demotion must lower the tier, not {} -> {}",
                        t.from_tier, t.to_tier
                    )));
                }
            }
        }
        Ok(())
    }

    /// Apply a session action to a copy of the session, or start a new one.
    fn apply_session(&self, p: &SessionEvent) -> Result<CoProductionSession, SchemaError> {
        if let SessionAction::Started {
            owner,
            at,
            checkpoint_interval_minutes,
        } = &p.action
        {
            if self.sessions.contains_key(&p.session_id) {
                return Err(SchemaError::DuplicateSession(p.session_id.clone()));
            }
            if self
                .sessions
                .values()
                .any(|s| &s.owner == owner && !s.is_closed())
            {
                return Err(SchemaError::OpenSessionExists(owner.clone()));
            }
            return Ok(CoProductionSession::start(
                p.session_id.clone(),
                owner.clone(),
                *at,
                *checkpoint_interval_minutes,
            )?);
        }
        let mut s = self
            .sessions
            .get(&p.session_id)
            .cloned()
            .ok_or_else(|| SchemaError::UnknownSession(p.session_id.clone()))?;
        match &p.action {
            SessionAction::Started { .. } => unreachable!("handled above"),
            SessionAction::Checkpoint {
                at,
                regrounding_note,
                unassisted,
            } => {
                nonblank(regrounding_note, "regrounding_note")?;
                s.record_checkpoint(*at, regrounding_note.clone(), *unassisted)?;
            }
            SessionAction::Pivot {
                at,
                ai_suggestion,
                adopted,
                significant,
            } => {
                nonblank(ai_suggestion, "ai_suggestion")?;
                s.log_pivot(*at, ai_suggestion.clone(), *adopted, *significant)?;
            }
            SessionAction::PivotReviewed {
                pivot_id,
                merit_note,
            } => {
                nonblank(merit_note, "merit_note")?;
                s.review_pivot(*pivot_id, merit_note.clone())?;
            }
            SessionAction::Finalized {
                at,
                counterarguments,
            } => s.finalize(*at, counterarguments.clone())?,
        }
        Ok(s)
    }

    /// Ledger cycles that count toward promotion: those closed after the
    /// type's latest transition. A cycle in which the tier changed belongs
    /// wholly to neither tier.
    pub fn promotion_ledger(&self, tt: &TaskTypeRecord) -> EvidenceLedger {
        let Some(last) = self
            .transitions
            .iter()
            .filter(|t| t.task_type_id == tt.task_type_id)
            .map(|t| t.cycle)
            .max()
        else {
            return tt.ledger.clone();
        };
        let recent = tt
            .ledger
            .cycles()
            .iter()
            .filter(|c| c.cycle_index > last)
            .cloned()
            .collect();
        EvidenceLedger::from_cycles(recent).expect("a suffix of a valid ledger is valid")
    }

    /// Ledger entry the current cycle would close with, if the type was
    /// AI-involved when the cycle opened.
    pub fn closing_summary(&self, tt: &TaskTypeRecord) -> Option<crate::governance::CycleSummary> {
        (tt.cycle_start_tier != Tier::AiRestricted).then(|| {
            let sampled = if tt.cycle_start_tier == Tier::Tier3 {
                tt.sampling.rate
            } else {
                1.0
            };
            summary_for_cycle(
                self,
                &tt.task_type_id,
                self.current_cycle,
                tt.cycle_start_tier,
                sampled,
            )
        })
    }

    fn index_entry(&self, event: &RegistryEvent) -> EventRef {
        let mut r = EventRef {
            event_id: event.event_id,
            kind: event.kind(),
            cycle: self.current_cycle,
            actor: event.actor.clone(),
            task_type_id: None,
            item_id: None,
            sprint: None,
            owner: None,
            tier: None,
        };
        let item_ref = |r: &mut EventRef, id: &ItemId| {
            r.item_id = Some(id.clone());
            if let Some(i) = self.items.get(id) {
                r.task_type_id = Some(i.task_type_id.clone());
                r.sprint = i.sprint.clone();
                r.owner = i.owner.clone();
                r.tier = Some(i.tier);
            }
        };
        match &event.body {
            EventBody::TaskTypeRegistered(p) => {
                r.task_type_id = Some(p.task_type_id.clone());
                r.tier = Some(p.tier);
            }
            EventBody::ItemClassified(p) => {
                item_ref(&mut r, &p.item_id);
                r.task_type_id = Some(p.task_type_id.clone());
                r.sprint = p.sprint.clone();
                r.tier = Some(p.tier);
                if p.owner.is_some() {
                    r.owner = p.owner.clone();
                }
            }
            EventBody::OwnerAssigned(p) => {
                item_ref(&mut r, &p.item_id);
                r.owner = Some(p.owner.clone());
            }
            EventBody::OutcomeRecorded(o) => item_ref(&mut r, &o.item_id),
            EventBody::TransitionApplied(t) => {
                r.task_type_id = Some(t.task_type_id.clone());
                r.tier = Some(t.to_tier);
            }
            EventBody::ProvenanceRecorded(p) => item_ref(&mut r, &p.item_id),
            EventBody::ViolationNoted(p) => {
                if let Some(i) = &p.item_id {
                    item_ref(&mut r, i);
                }
                if p.task_type_id.is_some() {
                    r.task_type_id = p.task_type_id.clone();
                }
            }
            EventBody::HumanOnlyCycleCompleted(p) => {
                if let Some(i) = &p.item_id {
                    item_ref(&mut r, i);
                }
                r.task_type_id = Some(p.task_type_id.clone());
            }
            EventBody::InjectionPlanted(p) => r.owner = Some(p.owner.clone()),
            EventBody::InjectionResolved(_) | EventBody::CycleClosed(_) => {}
            EventBody::SessionEvent(p) => {
                r.owner = self.sessions.get(&p.session_id).map(|s| s.owner.clone());
                if let SessionAction::Started { owner, .. } = &p.action {
                    r.owner = Some(owner.clone());
                }
            }
            EventBody::ItemStatusChanged(p) => item_ref(&mut r, &p.item_id),
            EventBody::IntegrationVerified(p) => item_ref(&mut r, &p.item_id),
            EventBody::DeficienciesSettled(p) => item_ref(&mut r, &p.item_id),
            EventBody::SamplingAdjusted(p) => r.task_type_id = Some(p.task_type_id.clone()),
            EventBody::DemotionPrompted(p) => {
                item_ref(&mut r, &p.item_id);
                r.task_type_id = Some(p.task_type_id.clone());
            }
            EventBody::RatingDowngraded(p) => {
                r.task_type_id = Some(p.task_type_id.clone());
                r.tier = p.reclassified_tier;
            }
        }
        r
    }

    /// Apply a validated event.
    pub fn fold(&mut self, event: &RegistryEvent) {
        let entry = self.index_entry(event);
        let cycle = self.current_cycle;
        match &event.body {
            EventBody::TaskTypeRegistered(p) => {
                let sampling = SamplingPlan {
                    task_type_id: p.task_type_id.clone(),
                    rate: p.initial_sampling_rate,
                    basis: SamplingBasis::DefaultStart,
                    history: Vec::new(),
                };
                self.task_types.insert(
                    p.task_type_id.clone(),
                    TaskTypeRecord {
                        task_type_id: p.task_type_id.clone(),
                        name: p.name.clone(),
                        checklist_domain: p.checklist_domain,
                        assessment: p.assessment,
                        tier: p.tier,
                        cycle_start_tier: p.tier,
                        rating_floor: p.assessment.capability,
                        rating_evidence_after: None,
                        ledger: EvidenceLedger::new(),
                        sampling,
                        cycles_since_human_only: 0,
                        human_only_cycles: Vec::new(),
                        registered_cycle: cycle,
                    },
                );
            }
            EventBody::ItemClassified(p) => {
                let prev = self.items.remove(&p.item_id);
                let owner = p
                    .owner
                    .clone()
                    .or_else(|| prev.as_ref().and_then(|i| i.owner.clone()));
                self.items.insert(
                    p.item_id.clone(),
                    ItemRecord {
                        item_id: p.item_id.clone(),
                        title: p.title.clone(),
                        task_type_id: p.task_type_id.clone(),
                        sprint: p.sprint.clone(),
                        assessment: p.assessment,
                        default_tier: p.default_tier,
                        matched_rule: p.matched_rule,
                        tier: p.tier,
                        override_rationale: p.override_rationale.clone(),
                        owner,
                        confirmed_owner: prev.as_ref().and_then(|i| i.confirmed_owner.clone()),
                        baseline_effort: p.baseline_effort,
                        status: prev.as_ref().map_or(ItemStatus::Planned, |i| i.status),
                        classified_cycle: cycle,
                        integration_verified: prev.as_ref().is_some_and(|i| i.integration_verified),
                        settled: prev.as_ref().and_then(|i| i.settled.clone()),
                        hidden_from_reviewer: prev.as_ref().is_some_and(|i| i.hidden_from_reviewer),
                    },
                );
            }
            EventBody::OwnerAssigned(p) => {
                let item = self.items.get_mut(&p.item_id).expect("validated");
                item.owner = Some(p.owner.clone());
                item.confirmed_owner = Some(p.owner.clone());
            }
            EventBody::OutcomeRecorded(o) => {
                let item = &self.items[&o.item_id];
                self.outcomes.push(RecordedOutcome {
                    event_id: event.event_id,
                    cycle,
                    task_type_id: item.task_type_id.clone(),
                    item_tier: item.tier,
                    outcome: o.clone(),
                });
                for c in self.campaigns.values_mut().filter(|c| !c.closed) {
                    c.observe(o);
                }
            }
            EventBody::TransitionApplied(t) => {
                let to = t.to_tier;
                self.task_types
                    .get_mut(&t.task_type_id)
                    .expect("validated")
                    .tier = to;
                self.cap_open_items(&t.task_type_id, to);
                self.transitions.push(t.clone());
            }
            EventBody::ProvenanceRecorded(p) => {
                self.provenance.insert(p.item_id.clone(), p.clone());
            }
            EventBody::ViolationNoted(p) => self.board.violations.push(ViolationRecord {
                event_id: event.event_id,
                cycle,
                timestamp: event.timestamp,
                reported_by: event.actor.clone(),
                violation: p.clone(),
            }),
            EventBody::HumanOnlyCycleCompleted(p) => {
                let tt = self.task_types.get_mut(&p.task_type_id).expect("validated");
                tt.cycles_since_human_only = 0;
                tt.human_only_cycles.push(cycle);
            }
            EventBody::InjectionPlanted(p) => {
                let campaign =
                    InjectionCampaign::new(p.campaign_id.clone(), p.owner.clone(), p.planted.clone())
                        .expect("validated");
                for pe in &p.planted {
                    self.items.get_mut(&pe.item_id).expect("validated").hidden_from_reviewer = true;
                }
                self.campaigns.insert(p.campaign_id.clone(), campaign);
            }
            EventBody::InjectionResolved(p) => {
                let c = self.campaigns.get_mut(&p.campaign_id).expect("validated");
                c.closed = true;
                let planted: Vec<ItemId> = c.planted.iter().map(|p| p.item_id.clone()).collect();
                for id in planted {
                    if let Some(i) = self.items.get_mut(&id) {
                        i.hidden_from_reviewer = false;
                    }
                }
            }
            EventBody::SessionEvent(p) => {
                let s = self.apply_session(p).expect("validated");
                self.sessions.insert(p.session_id.clone(), s);
            }
            EventBody::ItemStatusChanged(p) => {
                self.items.get_mut(&p.item_id).expect("validated").status = p.status;
            }
            EventBody::IntegrationVerified(p) => {
                self.items.get_mut(&p.item_id).expect("validated").integration_verified = true;
            }
            EventBody::DeficienciesSettled(p) => {
                self.items.get_mut(&p.item_id).expect("validated").settled = Some(SettlementRecord {
                    event_id: event.event_id,
                    resolution: p.resolution,
                    note: p.note.clone(),
                });
            }
            EventBody::SamplingAdjusted(p) => {
                let plan = &mut self
                    .task_types
                    .get_mut(&p.task_type_id)
                    .expect("validated")
                    .sampling;
                plan.rate = p.change.to;
                plan.basis = p.change.basis;
                plan.history.push(p.change.clone());
            }
            EventBody::CycleClosed(_) => {
                let summaries: BTreeMap<TaskTypeId, _> = self
                    .task_types
                    .values()
                    .filter_map(|tt| self.closing_summary(tt).map(|s| (tt.task_type_id.clone(), s)))
                    .collect();
                for tt in self.task_types.values_mut() {
                    if let Some(s) = summaries.get(&tt.task_type_id) {
                        tt.ledger.push(s.clone()).expect("validated");
                    }
                    tt.cycles_since_human_only += 1;
                    tt.cycle_start_tier = tt.tier;
                }
                self.current_cycle += 1;
            }
            EventBody::DemotionPrompted(p) => self.demotion_prompts.push(PromptRecord {
                event_id: event.event_id,
                cycle,
                prompt: p.clone(),
            }),
            EventBody::RatingDowngraded(p) => {
                let tt = self.task_types.get_mut(&p.task_type_id).expect("validated");
                tt.rating_floor = p.to;
                tt.rating_evidence_after = Some(cycle);
                if let Some(t) = p.reclassified_tier {
                    tt.tier = t;
                    self.cap_open_items(&p.task_type_id, t);
                }
            }
        }
        self.last_event_id = event.event_id;
        self.history.push(entry);
    }

    /// Open items above the type's new tier drop to it.
    fn cap_open_items(&mut self, task_type: &TaskTypeId, tier: Tier) {
        for item in self
            .items
            .values_mut()
            .filter(|i| &i.task_type_id == task_type && i.is_open() && i.tier > tier)
        {
            item.tier = tier;
        }
    }

    /// Validate then fold.
    pub fn apply(&mut self, event: &RegistryEvent) -> Result<(), SchemaError> {
        self.validate(event)?;
        self.fold(event);
        Ok(())
    }

    /// Items at Tier 2 or above that lack a named owner. Always empty for
    /// snapshots built through `apply`.
    pub fn ownership_gaps(&self) -> Vec<ItemId> {
        self.items
            .values()
            .filter(|i| i.tier.requires_owner() && i.owner.as_ref().map_or(true, PersonId::is_blank))
            .map(|i| i.item_id.clone())
            .collect()
    }

    /// Distinct people named anywhere in the registry.
    pub fn people(&self) -> BTreeSet<PersonId> {
        self.history
            .iter()
            .map(|r| r.actor.clone())
            .chain(self.items.values().filter_map(|i| i.owner.clone()))
            .collect()
    }
}
