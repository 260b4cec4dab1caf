//! The engine: configuration plus the registry writer.
//!
//! Every workflow the CLI and the service expose is a method here that takes
//! a request value, so both front ends append byte-identical events for the
//! same request, actor and timestamp.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{AdoptionMode, ConfigError, EngineConfig};
use crate::governance::{
    apply_demotion, apply_promotion, check_promotion, classify, Assessment, CapabilityRating,
    Classification, DemotionTrigger, PromotionEligibility, Tier, TransitionError, TransitionEvent,
};
use crate::ids::{CampaignId, ItemId, PersonId, SessionId, SprintId, TaskTypeId, Timestamp};
use crate::planning::{
    budget_validation, estimate, BacklogItem, BudgetReport, DoDState, EffortBreakdown, ItemStatus,
    PlanningError, ScalingProfile, SprintPlan,
};
use crate::quality::checklist::ChecklistError;
use crate::quality::injection::InjectionError;
use crate::quality::metrics::escapes_in;
use crate::quality::sampling::SamplingError;
use crate::quality::{
    adjust_sampling, cycle_metrics, erosion_check, lint, run_injection_audit, AuditReport,
    ChecklistDomain, ChecklistSet, CycleReport, ErosionStatus, LintFinding, PlantedError,
    ValidationOutcome,
};
use crate::registry::events::*;
use crate::registry::export::{export_csv, Entity};
use crate::registry::snapshot::{reclassified_tier, RegistrySnapshot, SchemaError};
use crate::registry::store::{FileStore, ReadOnlyStore, StoreError};
use crate::registry::{query, QueryFilter, QueryResult, Registry, RegistryError, ReplayOptions};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Injection(#[from] InjectionError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checklist(#[from] ChecklistError),
    #[error("{0} is not on the team roster")]
    NotMember(PersonId),
    #[error("{0} does not hold the Hybrid Work Owner function and cannot approve promotions")]
    NotApprover(PersonId),
    #[error("{0}")]
    Invalid(String),
}

impl From<SchemaError> for EngineError {
    fn from(e: SchemaError) -> Self {
        EngineError::Registry(RegistryError::Schema(e))
    }
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        EngineError::Registry(RegistryError::Store(e))
    }
}

/// Broad error classes for exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound,
    Conflict,
    Forbidden,
    Invalid,
    Io,
}

impl EngineError {
    pub fn class(&self) -> ErrorClass {
        match self {
            EngineError::Registry(RegistryError::Store(StoreError::Locked(_))) => ErrorClass::Conflict,
            EngineError::Registry(RegistryError::Store(_)) => ErrorClass::Io,
            EngineError::Registry(RegistryError::Corrupt(_)) => ErrorClass::Io,
            EngineError::Config(ConfigError::Io { .. }) => ErrorClass::Io,
            EngineError::Checklist(ChecklistError::Io { .. }) => ErrorClass::Io,
            EngineError::Registry(RegistryError::Schema(s)) => match s {
                SchemaError::UnknownItem(_)
                | SchemaError::UnknownTaskType(_)
                | SchemaError::UnknownCampaign(_)
                | SchemaError::UnknownSession(_) => ErrorClass::NotFound,
                SchemaError::StaleTransition { .. }
                | SchemaError::DuplicateTaskType(_)
                | SchemaError::DuplicateCampaign(_)
                | SchemaError::DuplicateSession(_)
                | SchemaError::OpenSessionExists(_)
                | SchemaError::ItemClosed(_)
                | SchemaError::SamplingRateMismatch { .. } => ErrorClass::Conflict,
                _ => ErrorClass::Invalid,
            },
            EngineError::Transition(TransitionError::PromotionBlocked(_)) => ErrorClass::Conflict,
            EngineError::NotMember(_) | EngineError::NotApprover(_) => ErrorClass::Forbidden,
            _ => ErrorClass::Invalid,
        }
    }
}

pub type EngineResult<T> = Result<T, EngineError>;

/// Retrospective prompts added to the team's existing retro.
pub const RETRO_QUESTIONS: [&str; 4] = [
    "Were tier assignments accurate?",
    "Was validation effort correctly estimated?",
    "Were there quality surprises?",
    "Are there competence erosion signals?",
];
pub const MINIMAL_RETRO_QUESTION: &str = "Did AI help or create extra work this sprint?";

// Requests shared by the CLI and the service.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterTaskType {
    pub task_type_id: TaskTypeId,
    pub name: String,
    pub checklist_domain: ChecklistDomain,
    pub assessment: Assessment,
    /// Defaults to the matrix result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_evidence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyItem {
    pub item_id: ItemId,
    pub title: String,
    pub task_type_id: TaskTypeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprint: Option<SprintId>,
    /// Defaults to the task type's assessment at its current capability rating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<Assessment>,
    /// Defaults to the matrix result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<PersonId>,
    pub baseline_effort: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoteRequest {
    #[serde(default = "member_request")]
    pub trigger: DemotionTrigger,
    pub rationale: String,
}

fn member_request() -> DemotionTrigger {
    DemotionTrigger::MemberRequest
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromoteRequest {
    /// The validation function confirms the next tier's protocol is resourced.
    pub capacity_ok: bool,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DowngradeRequest {
    pub to: CapabilityRating,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqcRateRequest {
    pub rate: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleHumanOnly {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprint: Option<SprintId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<PersonId>,
    pub baseline_effort: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationPreview {
    pub assessment: Assessment,
    #[serde(flatten)]
    pub classification: Classification,
    pub requires_owner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionReport {
    pub task_type_id: TaskTypeId,
    pub effective_rating: CapabilityRating,
    /// Matrix tier for the type's assessment at its effective rating.
    pub matrix_tier: Tier,
    #[serde(flatten)]
    pub eligibility: PromotionEligibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub sprint_id: SprintId,
    pub items: Vec<BacklogItem>,
    pub budget: BudgetReport,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroReport {
    pub cycle: u32,
    pub closed: bool,
    pub metrics: Vec<CycleReport>,
    pub promotion: Vec<PromotionReport>,
    pub erosion: Vec<ErosionStatus>,
    pub lint: Vec<LintFinding>,
    pub demotion_prompts: Vec<DemotionPrompted>,
    pub violations: Vec<ViolationNoted>,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroClose {
    pub events: Vec<RegistryEvent>,
    pub report: RetroReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignClose {
    pub event: RegistryEvent,
    pub audit: AuditReport,
}

/// Classify an assessment without recording anything.
pub fn preview_classification(assessment: Assessment) -> ClassificationPreview {
    let classification = classify(&assessment);
    ClassificationPreview {
        assessment,
        requires_owner: classification.tier.requires_owner(),
        classification,
    }
}

pub struct Engine {
    config: EngineConfig,
    registry: Registry,
    checklists: ChecklistSet,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("registry", &self.registry).finish()
    }
}

impl Engine {
    pub fn new(config: EngineConfig, registry: Registry) -> EngineResult<Self> {
        config.validate()?;
        let checklists = match config.checklists_path() {
            Some(dir) => ChecklistSet::load_dir(&dir)?,
            None => ChecklistSet::bundled().clone(),
        };
        Ok(Self {
            config,
            registry,
            checklists,
        })
    }

    /// In-memory engine for tests and embedding.
    pub fn in_memory(config: EngineConfig) -> EngineResult<Self> {
        Self::new(config, Registry::in_memory())
    }

    fn replay_options(config: &EngineConfig) -> ReplayOptions {
        ReplayOptions {
            skip_corrupt: config.skip_corrupt_events,
        }
    }

    /// Open the registry as its single writer.
    pub fn open(config: EngineConfig) -> EngineResult<Self> {
        let store = FileStore::open(&config.registry_path())?;
        let registry = Registry::open(Box::new(store), Self::replay_options(&config))?;
        Self::new(config, registry)
    }

    /// Open without the writer lock; writes are refused.
    pub fn open_read_only(config: EngineConfig) -> EngineResult<Self> {
        let store = ReadOnlyStore::open(&config.registry_path())?;
        let registry = Registry::open(Box::new(store), Self::replay_options(&config))?;
        Self::new(config, registry)
    }

    pub fn load(config_path: &Path, writable: bool) -> EngineResult<Self> {
        let config = EngineConfig::load(config_path)?;
        if writable {
            Self::open(config)
        } else {
            Self::open_read_only(config)
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn snapshot(&self) -> &RegistrySnapshot {
        self.registry.snapshot()
    }

    pub fn events(&self) -> &[RegistryEvent] {
        self.registry.events()
    }

    pub fn events_after(&self, after: u64) -> &[RegistryEvent] {
        self.registry.events_after(after)
    }

    pub fn checklists(&self) -> &ChecklistSet {
        &self.checklists
    }

    fn member(&self, person: &PersonId) -> EngineResult<()> {
        if self.config.is_member(person) {
            Ok(())
        } else {
            Err(EngineError::NotMember(person.clone()))
        }
    }

    /// Append one event on behalf of `actor`.
    pub fn append(&mut self, ts: Timestamp, actor: &PersonId, body: EventBody) -> EngineResult<RegistryEvent> {
        self.member(actor)?;
        self.registry.append(ts, actor, body)?;
        Ok(self.registry.events().last().expect("just appended").clone())
    }

    // Classification

    pub fn register_task_type(
        &mut self,
        ts: Timestamp,
        actor: &PersonId,
        req: RegisterTaskType,
    ) -> EngineResult<RegistryEvent> {
        let c = classify(&req.assessment);
        let body = EventBody::TaskTypeRegistered(TaskTypeRegistered {
            task_type_id: req.task_type_id,
            name: req.name,
            checklist_domain: req.checklist_domain,
            assessment: req.assessment,
            default_tier: c.tier,
            matched_rule: c.matched_rule,
            tier: req.tier.unwrap_or(c.tier),
            override_rationale: req.override_rationale,
            baseline_evidence: req.baseline_evidence,
            initial_sampling_rate: self.config.sampling.initial_rate,
        });
        self.append(ts, actor, body)
    }

    /// The assessment an item of this type gets when none is supplied.
    pub fn current_assessment(&self, task_type: &TaskTypeId) -> EngineResult<Assessment> {
        Ok(self
            .snapshot()
            .task_type(task_type)?
            .current_assessment(&self.config.policy))
    }

    pub fn classify_item(&mut self, ts: Timestamp, actor: &PersonId, req: ClassifyItem) -> EngineResult<RegistryEvent> {
        let assessment = match req.assessment {
            Some(a) => a,
            None => self.current_assessment(&req.task_type_id)?,
        };
        if let Some(o) = &req.owner {
            self.member(o)?;
        }
        let c = classify(&assessment);
        // Without an explicit tier, an item never lands above its type.
        let type_tier = self.snapshot().task_type(&req.task_type_id)?.tier;
        let (tier, override_rationale) = match req.tier {
            Some(t) => (t, req.override_rationale),
            None if c.tier > type_tier => (
                type_tier,
                req.override_rationale
                    .or_else(|| Some(format!("capped at the task type's current tier ({type_tier})"))),
            ),
            None => (c.tier, req.override_rationale),
        };
        let body = EventBody::ItemClassified(ItemClassified {
            item_id: req.item_id,
            title: req.title,
            task_type_id: req.task_type_id,
            sprint: req.sprint,
            assessment,
            default_tier: c.tier,
            matched_rule: c.matched_rule,
            tier,
            override_rationale,
            owner: req.owner,
            baseline_effort: req.baseline_effort,
        });
        self.append(ts, actor, body)
    }

    pub fn assign_owner(&mut self, ts: Timestamp, actor: &PersonId, item: ItemId, owner: PersonId) -> EngineResult<RegistryEvent> {
        self.member(&owner)?;
        self.append(ts, actor, EventBody::OwnerAssigned(OwnerAssigned { item_id: item, owner }))
    }

    // Execution

    /// Record a review outcome. A critical finding also appends a demotion
    /// prompt and, for Tier 2+ task types, an immediate demotion.
    pub fn record_outcome(
        &mut self,
        ts: Timestamp,
        actor: &PersonId,
        outcome: ValidationOutcome,
    ) -> EngineResult<Vec<RegistryEvent>> {
        self.member(&outcome.reviewer)?;
        let task_type = self.snapshot().item(&outcome.item_id)?.task_type_id.clone();
        let critical = outcome.critical_count() > 0;
        let item_id = outcome.item_id.clone();
        let mut out = vec![self.append(ts, actor, EventBody::OutcomeRecorded(outcome))?];
        if !critical {
            return Ok(out);
        }
        out.push(self.append(
            ts,
            actor,
            EventBody::DemotionPrompted(DemotionPrompted {
                task_type_id: task_type.clone(),
                item_id: item_id.clone(),
                reason: format!("critical finding recorded on {item_id}"),
            }),
        )?);
        let snap = self.snapshot();
        let tt = snap.task_type(&task_type)?;
        if tt.tier.level() >= 2 {
            let evidence = snap.closing_summary(tt).into_iter().collect();
            let ev = apply_demotion(
                &task_type,
                tt.tier,
                DemotionTrigger::CriticalError,
                actor,
                &self.config.policy,
                snap.current_cycle,
                evidence,
                format!("critical finding on {item_id}"),
                ts,
            )?;
            out.push(self.append(ts, actor, EventBody::TransitionApplied(ev))?);
        }
        Ok(out)
    }

    pub fn record_provenance(&mut self, ts: Timestamp, actor: &PersonId, p: ProvenanceRecord) -> EngineResult<RegistryEvent> {
        self.append(ts, actor, EventBody::ProvenanceRecorded(p))
    }

    pub fn note_violation(&mut self, ts: Timestamp, actor: &PersonId, v: ViolationNoted) -> EngineResult<RegistryEvent> {
        self.append(ts, actor, EventBody::ViolationNoted(v))
    }

    pub fn set_status(&mut self, ts: Timestamp, actor: &PersonId, item: ItemId, status: ItemStatus) -> EngineResult<RegistryEvent> {
        if status == ItemStatus::Done {
            let dod = self.dod(&item)?;
            if !dod.is_done_eligible() {
                return Err(SchemaError::NotDoneEligible {
                    item,
                    unmet: dod.unmet().into_iter().map(str::to_string).collect(),
                }
                .into());
            }
        }
        self.append(ts, actor, EventBody::ItemStatusChanged(ItemStatusChanged { item_id: item, status }))
    }

    pub fn verify_integration(&mut self, ts: Timestamp, actor: &PersonId, item: ItemId, note: String) -> EngineResult<RegistryEvent> {
        self.append(ts, actor, EventBody::IntegrationVerified(IntegrationVerified { item_id: item, note }))
    }

    pub fn settle_deficiencies(&mut self, ts: Timestamp, actor: &PersonId, s: DeficienciesSettled) -> EngineResult<RegistryEvent> {
        self.append(ts, actor, EventBody::DeficienciesSettled(s))
    }

    pub fn dod(&self, item: &ItemId) -> EngineResult<DoDState> {
        Ok(crate::planning::dod_check_with(item, self.snapshot(), &self.checklists)?)
    }

    // Transitions

    /// Immediate demotion; any team member, no approval.
    pub fn demote(&mut self, ts: Timestamp, actor: &PersonId, task_type: &TaskTypeId, req: DemoteRequest) -> EngineResult<RegistryEvent> {
        self.member(actor)?;
        let snap = self.snapshot();
        let tt = snap.task_type(task_type)?;
        let evidence = tt.ledger.tail(self.config.policy.consecutive_breach_limit as usize).to_vec();
        let ev = apply_demotion(
            task_type,
            tt.tier,
            req.trigger,
            actor,
            &self.config.policy,
            snap.current_cycle,
            evidence,
            req.rationale,
            ts,
        )?;
        self.append(ts, actor, EventBody::TransitionApplied(ev))
    }

    pub fn promotion_report(&self, task_type: &TaskTypeId, capacity_ok: bool) -> EngineResult<PromotionReport> {
        let policy = &self.config.policy;
        let snap = self.snapshot();
        let tt = snap.task_type(task_type)?;
        let assessment = tt.current_assessment(policy);
        Ok(PromotionReport {
            task_type_id: task_type.clone(),
            effective_rating: assessment.capability,
            matrix_tier: classify(&assessment).tier,
            eligibility: check_promotion(tt.tier, &snap.promotion_ledger(tt), policy, capacity_ok),
        })
    }

    pub fn promotion_check(&self, task_type: Option<&TaskTypeId>, capacity_ok: bool) -> EngineResult<Vec<PromotionReport>> {
        match task_type {
            Some(t) => Ok(vec![self.promotion_report(t, capacity_ok)?]),
            None => self
                .snapshot()
                .task_types
                .keys()
                .map(|t| self.promotion_report(t, capacity_ok))
                .collect(),
        }
    }

    /// Apply an eligible single-step promotion as a recorded human decision.
    pub fn promote(&mut self, ts: Timestamp, approver: &PersonId, task_type: &TaskTypeId, req: PromoteRequest) -> EngineResult<RegistryEvent> {
        if !self.config.may_approve(approver) {
            return Err(EngineError::NotApprover(approver.clone()));
        }
        let snap = self.snapshot();
        let tt = snap.task_type(task_type)?;
        let ev: TransitionEvent = apply_promotion(
            task_type,
            tt.tier,
            &snap.promotion_ledger(tt),
            &self.config.policy,
            req.capacity_ok,
            approver,
            snap.current_cycle,
            req.rationale,
            ts,
        )?;
        self.append(ts, approver, EventBody::TransitionApplied(ev))
    }

    /// Lower a task type's capability rating. When the lower rating
    /// classifies below the current tier, the type is reclassified.
    pub fn downgrade_rating(&mut self, ts: Timestamp, actor: &PersonId, task_type: &TaskTypeId, req: DowngradeRequest) -> EngineResult<RegistryEvent> {
        let tt = self.snapshot().task_type(task_type)?;
        let from = tt.effective_rating(&self.config.policy);
        let body = EventBody::RatingDowngraded(RatingDowngraded {
            task_type_id: task_type.clone(),
            from,
            to: req.to,
            reclassified_tier: reclassified_tier(tt, req.to),
            rationale: req.rationale,
        });
        self.append(ts, actor, body)
    }

    pub fn set_sqc_sampling_rate(&mut self, ts: Timestamp, actor: &PersonId, task_type: &TaskTypeId, req: SqcRateRequest) -> EngineResult<RegistryEvent> {
        let snap = self.snapshot();
        let tt = snap.task_type(task_type)?;
        let next = tt
            .sampling
            .with_sqc_rate(req.rate, snap.current_cycle, &self.config.sampling, req.reason)?;
        let change = next.history.last().expect("just changed").clone();
        self.append(
            ts,
            actor,
            EventBody::SamplingAdjusted(SamplingAdjusted {
                task_type_id: task_type.clone(),
                change,
            }),
        )
    }

    // Competence maintenance

    pub fn erosion(&self) -> Vec<ErosionStatus> {
        erosion_check(self.snapshot(), &self.config.erosion)
    }

    /// Put an AI-restricted item for `task_type` on the backlog.
    pub fn schedule_human_only(&mut self, ts: Timestamp, actor: &PersonId, task_type: &TaskTypeId, req: ScheduleHumanOnly) -> EngineResult<RegistryEvent> {
        let snap = self.snapshot();
        let tt = snap.task_type(task_type)?;
        let item_id = req
            .item_id
            .unwrap_or_else(|| ItemId::new(format!("{}-human-only-c{}", task_type, snap.current_cycle)));
        let title = req
            .title
            .unwrap_or_else(|| format!("Human-only cycle: {}", tt.name));
        let assessment = tt.current_assessment(&self.config.policy);
        let c = classify(&assessment);
        let override_rationale = (c.tier != Tier::AiRestricted)
            .then(|| "human-only cycle scheduled to maintain team competence".to_string());
        self.append(
            ts,
            actor,
            EventBody::ItemClassified(ItemClassified {
                item_id,
                title,
                task_type_id: task_type.clone(),
                sprint: req.sprint,
                assessment,
                default_tier: c.tier,
                matched_rule: c.matched_rule,
                tier: Tier::AiRestricted,
                override_rationale,
                owner: req.owner,
                baseline_effort: req.baseline_effort,
            }),
        )
    }

    pub fn complete_human_only(&mut self, ts: Timestamp, actor: &PersonId, task_type: &TaskTypeId, item: Option<ItemId>) -> EngineResult<RegistryEvent> {
        self.append(
            ts,
            actor,
            EventBody::HumanOnlyCycleCompleted(HumanOnlyCycleCompleted {
                task_type_id: task_type.clone(),
                item_id: item,
            }),
        )
    }

    // Planning

    /// Tier 3 sampling rate used to estimate items of `task_type`.
    pub fn sampling_rate(&self, task_type: &TaskTypeId) -> f64 {
        self.snapshot()
            .task_types
            .get(task_type)
            .map_or(self.config.sampling.initial_rate, |t| t.sampling.rate)
    }

    /// Fill tier and owner from the registry where the item is known.
    fn hydrate(&self, mut item: BacklogItem) -> BacklogItem {
        if let Some(rec) = self.snapshot().items.get(&item.item_id) {
            item.tier = item.tier.or(Some(rec.tier));
            item.owner = item.owner.or_else(|| rec.owner.clone());
            if item.sprint.is_none() {
                item.sprint = rec.sprint.clone();
            }
        }
        item
    }

    pub fn estimate_item(&self, item: &BacklogItem) -> EngineResult<EffortBreakdown> {
        let item = self.hydrate(item.clone());
        Ok(estimate(&item, &self.config.effort, self.sampling_rate(&item.task_type_id))?)
    }

    /// Estimate every classified item, then budget validation.
    pub fn plan(&self, plan: SprintPlan) -> EngineResult<PlanReport> {
        let mut notes = Vec::new();
        let mut items = Vec::with_capacity(plan.items.len());
        for item in plan.items {
            let mut item = self.hydrate(item);
            item.validate()?;
            if item.tier.is_some() {
                item.estimate = Some(estimate(&item, &self.config.effort, self.sampling_rate(&item.task_type_id))?);
            }
            if item.tier == Some(Tier::Tier1) {
                notes.push(format!(
                    "{}: Tier 1 estimate is the standard human estimate; AI assistance is not pre-credited",
                    item.item_id
                ));
            }
            items.push(item);
        }
        let plan = SprintPlan { items, ..plan };
        let budget = budget_validation(&plan)?;
        Ok(PlanReport {
            sprint_id: plan.sprint_id,
            items: plan.items,
            budget,
            notes,
        })
    }

    pub fn scaling(&self) -> ScalingProfile {
        crate::planning::scaling_profile(self.config.team_size).with_overrides(&self.config.scaling_overrides)
    }

    // Quality

    pub fn cycle_metrics(&self, task_type: &TaskTypeId, cycle: u32) -> EngineResult<CycleReport> {
        Ok(cycle_metrics(task_type, cycle, self.snapshot())?)
    }

    /// Lint the registry and, if given, a plan (estimated first).
    pub fn lint(&self, plan: Option<SprintPlan>) -> EngineResult<Vec<LintFinding>> {
        let plan = match plan {
            Some(p) => {
                let mut items = Vec::with_capacity(p.items.len());
                for item in p.items {
                    let mut item = self.hydrate(item);
                    if item.tier.is_some() && item.estimate.is_none() {
                        item.estimate = self.estimate_item(&item).ok();
                    }
                    items.push(item);
                }
                Some(SprintPlan { items, ..p })
            }
            None => None,
        };
        Ok(lint(
            self.snapshot(),
            plan.as_ref(),
            &self.config.policy,
            &self.config.erosion,
            &self.config.lint,
        ))
    }

    pub fn plant_injection(&mut self, ts: Timestamp, actor: &PersonId, campaign: CampaignId, planted: Vec<PlantedError>) -> EngineResult<RegistryEvent> {
        self.append(
            ts,
            actor,
            EventBody::InjectionPlanted(InjectionPlanted {
                campaign_id: campaign,
                owner: actor.clone(),
                planted,
            }),
        )
    }

    /// Close a campaign, reveal its items and report detection.
    pub fn resolve_injection(&mut self, ts: Timestamp, actor: &PersonId, campaign: CampaignId) -> EngineResult<CampaignClose> {
        let event = self.append(
            ts,
            actor,
            EventBody::InjectionResolved(InjectionResolved {
                campaign_id: campaign.clone(),
            }),
        )?;
        let snap = self.snapshot();
        let c = snap
            .campaigns
            .get(&campaign)
            .ok_or_else(|| SchemaError::UnknownCampaign(campaign.clone()))?;
        let audit = run_injection_audit(c, snap.outcomes.iter().map(|o| &o.outcome))?;
        Ok(CampaignClose { event, audit })
    }

    pub fn session(&mut self, ts: Timestamp, actor: &PersonId, session: SessionId, action: SessionAction) -> EngineResult<RegistryEvent> {
        if let SessionAction::Started { owner, .. } = &action {
            self.member(owner)?;
        }
        self.append(ts, actor, EventBody::SessionEvent(SessionEvent { session_id: session, action }))
    }

    // Retrospective

    pub fn retro_report(&self, cycle: u32) -> EngineResult<RetroReport> {
        let snap = self.snapshot();
        let metrics = snap
            .task_types
            .keys()
            .map(|t| cycle_metrics(t, cycle, snap))
            .collect::<Result<Vec<_>, _>>()?;
        let questions = match self.config.mode {
            AdoptionMode::Full => RETRO_QUESTIONS.iter().map(|q| q.to_string()).collect(),
            AdoptionMode::Minimal => vec![MINIMAL_RETRO_QUESTION.to_string()],
        };
        Ok(RetroReport {
            cycle,
            closed: cycle < snap.current_cycle,
            metrics,
            promotion: self.promotion_check(None, false)?,
            erosion: self.erosion(),
            lint: self.lint(None)?,
            demotion_prompts: snap
                .demotion_prompts
                .iter()
                .filter(|p| p.cycle == cycle)
                .map(|p| p.prompt.clone())
                .collect(),
            violations: snap
                .board
                .violations
                .iter()
                .filter(|v| v.cycle == cycle)
                .map(|v| v.violation.clone())
                .collect(),
            questions,
        })
    }

    /// Close the current cycle: demote types whose closing cycle completes a
    /// breach run, review Tier 3+ sampling rates, then fold the cycle into
    /// every ledger.
    pub fn close_cycle(&mut self, ts: Timestamp, actor: &PersonId) -> EngineResult<RetroClose> {
        self.member(actor)?;
        let cycle = self.snapshot().current_cycle;
        let policy = self.config.policy.clone();
        let mut bodies = Vec::new();
        {
            let snap = self.snapshot();
            for tt in snap.task_types.values() {
                let Some(summary) = snap.closing_summary(tt) else {
                    continue;
                };
                let mut ledger = tt.ledger.clone();
                ledger.push(summary).map_err(SchemaError::from)?;

                if tt.tier == tt.cycle_start_tier
                    && tt.tier != Tier::AiRestricted
                    && ledger.breach_streak(&policy) >= policy.consecutive_breach_limit
                {
                    let ev = apply_demotion(
                        &tt.task_type_id,
                        tt.tier,
                        DemotionTrigger::ConsecutiveBreach,
                        actor,
                        &policy,
                        cycle,
                        ledger.tail(policy.consecutive_breach_limit as usize).to_vec(),
                        format!(
                            "error rate above the {} threshold for {} consecutive cycles",
                            tt.tier, policy.consecutive_breach_limit
                        ),
                        ts,
                    )?;
                    bodies.push(EventBody::TransitionApplied(ev));
                }

                if tt.cycle_start_tier.is_sampled() {
                    let escapes = escapes_in(snap, &tt.task_type_id, cycle);
                    let next = adjust_sampling(&tt.sampling, ledger.cycles(), escapes, cycle, &self.config.sampling, &policy);
                    if next.history.len() > tt.sampling.history.len() {
                        bodies.push(EventBody::SamplingAdjusted(SamplingAdjusted {
                            task_type_id: tt.task_type_id.clone(),
                            change: next.history.last().expect("changed").clone(),
                        }));
                    }
                }
            }
        }
        bodies.push(EventBody::CycleClosed(CycleClosed { cycle }));
        let mut events = Vec::with_capacity(bodies.len());
        for body in bodies {
            events.push(self.append(ts, actor, body)?);
        }
        Ok(RetroClose {
            events,
            report: self.retro_report(cycle)?,
        })
    }

    // Reads

    pub fn query(&self, filter: &QueryFilter) -> QueryResult {
        query(self.snapshot(), filter)
    }

    pub fn export(&self, entity: Entity) -> String {
        export_csv(self.snapshot(), entity)
    }
}
