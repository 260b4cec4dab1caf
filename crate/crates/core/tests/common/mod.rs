//! Shared fixtures: a six-person team running a two-week sprint.

#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use tiergate::governance::{Assessment, CapabilityRating, Level, Tier};
use tiergate::ids::{ItemId, PersonId, TaskTypeId, Timestamp};
use tiergate::interface::{
    ClassifyItem, DowngradeRequest, Engine, EngineConfig, RegisterTaskType, ScheduleHumanOnly,
    SqcRateRequest,
};
use tiergate::planning::{BacklogItem, DoDState, ItemStatus, SprintPlan};
use tiergate::quality::{CheckResult, ChecklistDomain, ChecklistTemplate, DetectedIn, Finding, Severity, ValidationOutcome};
use tiergate::registry::events::{Producer, ProvenanceRecord, ViolationNoted};

pub const TEAM: [&str; 6] = ["sm", "po", "dev1", "dev2", "dev3", "dev4"];

/// Day `d` of the sprint (day 1 is Monday 2026-03-02), at 09:00 plus `minute`.
pub fn day(d: u32, minute: u32) -> Timestamp {
    Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap()
        + chrono::Duration::days(d as i64)
        + chrono::Duration::minutes(minute as i64)
}

pub fn p(name: &str) -> PersonId {
    PersonId::new(name)
}

pub fn team_config() -> EngineConfig {
    let mut c = EngineConfig::default();
    c.team_size = 6;
    c.roster = TEAM.iter().map(|n| p(n)).collect();
    c.hwo = vec![p("sm")];
    c
}

pub fn engine() -> Engine {
    Engine::in_memory(team_config()).expect("team config is valid")
}

pub fn a(s: Level, v: Level, c: Level, d: CapabilityRating) -> Assessment {
    Assessment {
        structuredness: s,
        verifiability: v,
        consequence: c,
        capability: d,
    }
}

pub fn register(
    e: &mut Engine,
    at: Timestamp,
    id: &str,
    domain: ChecklistDomain,
    assessment: Assessment,
    tier: Option<(Tier, &str)>,
) {
    let evidence = (assessment.capability > CapabilityRating::Unproven)
        .then(|| format!("pre-adoption pilot notes for {id}"));
    e.register_task_type(
        at,
        &p("sm"),
        RegisterTaskType {
            task_type_id: id.into(),
            name: id.replace('-', " "),
            checklist_domain: domain,
            assessment,
            tier: tier.map(|t| t.0),
            override_rationale: tier.map(|t| t.1.to_string()),
            baseline_evidence: evidence,
        },
    )
    .unwrap_or_else(|err| panic!("register {id}: {err}"));
}

pub fn classify(e: &mut Engine, at: Timestamp, item: &str, task_type: &str, owner: &str, baseline: f64) {
    e.classify_item(
        at,
        &p("sm"),
        ClassifyItem {
            item_id: item.into(),
            title: format!("{item} work"),
            task_type_id: task_type.into(),
            sprint: Some("S1".into()),
            assessment: None,
            tier: None,
            override_rationale: None,
            owner: Some(p(owner)),
            baseline_effort: baseline,
        },
    )
    .unwrap_or_else(|err| panic!("classify {item}: {err}"));
}

/// Every check in the domain template answered `pass`.
pub fn full_checklist(domain: ChecklistDomain) -> BTreeMap<String, CheckResult> {
    ChecklistTemplate::bundled(domain)
        .checks
        .into_iter()
        .map(|c| (c.id, CheckResult::Pass))
        .collect()
}

pub fn outcome(item: &str, reviewer: &str, detected_in: DetectedIn, finding: Option<(Severity, &str)>) -> ValidationOutcome {
    let findings: Vec<Finding> = finding
        .map(|(severity, category)| Finding {
            severity,
            category: category.into(),
            note: String::new(),
        })
        .into_iter()
        .collect();
    ValidationOutcome {
        item_id: item.into(),
        reviewer: p(reviewer),
        checklist_results: BTreeMap::new(),
        first_pass_accept: findings.iter().all(|f| f.severity < Severity::Major),
        findings,
        review_minutes: 25,
        detected_in,
    }
}

pub fn provenance(item: &str, validated_by: &str) -> ProvenanceRecord {
    ProvenanceRecord {
        item_id: item.into(),
        producer: Producer::AiSystem {
            system_id: "assistant".into(),
        },
        tool: "chat".into(),
        generation_context: "spec prompt v1".into(),
        validated_by: p(validated_by),
    }
}

/// The illustrative sprint: six task types, one sprint closed, and the
/// documentation type downgraded at the start of the next.
pub fn scenario() -> Engine {
    use CapabilityRating::*;
    use Level::*;

    let mut e = engine();
    let sm = p("sm");

    register(&mut e, day(1, 0), "api", ChecklistDomain::Code, a(High, High, Med, Established), None);
    register(
        &mut e,
        day(1, 1),
        "unit-tests",
        ChecklistDomain::Code,
        a(High, High, Low, Mature),
        Some((Tier::Tier3, "team starts one step below the matrix until sampling is calibrated")),
    );
    register(
        &mut e,
        day(1, 2),
        "user-docs",
        ChecklistDomain::Document,
        a(Med, Med, Med, Emerging),
        Some((Tier::Tier2, "docs reviewed line by line this sprint")),
    );
    register(&mut e, day(1, 3), "security-review", ChecklistDomain::Code, a(Low, Med, High, Established), None);
    register(&mut e, day(1, 4), "release-notes", ChecklistDomain::Document, a(High, High, Med, Established), None);
    register(
        &mut e,
        day(1, 5),
        "migration",
        ChecklistDomain::Code,
        a(High, High, High, Emerging),
        Some((Tier::Tier1, "AI drafts migration scripts, a human writes the final version")),
    );

    for (i, item) in ["API-1", "API-2", "API-3"].iter().enumerate() {
        classify(&mut e, day(1, 10 + i as u32), item, "api", "dev1", 8.0);
    }
    classify(&mut e, day(1, 20), "UT-1", "unit-tests", "dev2", 5.0);
    classify(&mut e, day(1, 21), "DOC-1", "user-docs", "dev3", 3.0);
    classify(&mut e, day(1, 22), "SEC-1", "security-review", "dev4", 5.0);
    classify(&mut e, day(1, 23), "RN-1", "release-notes", "dev4", 2.0);
    classify(&mut e, day(1, 24), "MIG-1", "migration", "dev2", 8.0);

    e.set_sqc_sampling_rate(
        day(1, 30),
        &sm,
        &"unit-tests".into(),
        SqcRateRequest {
            rate: 0.15,
            reason: "acceptance sampling plan for lot size 40".into(),
        },
    )
    .unwrap();

    let record = |e: &mut Engine, at, o: ValidationOutcome| {
        e.record_outcome(at, &sm, o).unwrap_or_else(|err| panic!("record: {err}"));
    };

    let mut api1 = outcome("API-1", "dev2", DetectedIn::Review, None);
    api1.checklist_results = full_checklist(ChecklistDomain::Code);
    record(&mut e, day(2, 0), api1);
    record(
        &mut e,
        day(3, 0),
        outcome("API-2", "dev2", DetectedIn::Review, Some((Severity::Major, "business_logic"))),
    );
    record(&mut e, day(3, 30), outcome("UT-1", "dev1", DetectedIn::Sampling, None));
    record(&mut e, day(4, 0), outcome("API-3", "dev2", DetectedIn::Review, None));
    record(&mut e, day(5, 30), outcome("UT-1", "dev1", DetectedIn::Sampling, None));
    record(
        &mut e,
        day(6, 0),
        outcome("DOC-1", "po", DetectedIn::Review, Some((Severity::Major, "factual_accuracy"))),
    );
    record(
        &mut e,
        day(7, 0),
        outcome("UT-1", "dev3", DetectedIn::Integration, Some((Severity::Major, "integration"))),
    );

    let mut rn = outcome("RN-1", "po", DetectedIn::Review, None);
    rn.checklist_results = full_checklist(ChecklistDomain::Document);
    record(&mut e, day(8, 0), rn);
    e.record_provenance(day(8, 1), &sm, provenance("RN-1", "po")).unwrap();
    e.assign_owner(day(8, 2), &sm, "RN-1".into(), p("dev4")).unwrap();
    e.verify_integration(day(8, 3), &sm, "RN-1".into(), "published to staging changelog".into())
        .unwrap();
    e.set_status(day(8, 4), &sm, "RN-1".into(), ItemStatus::Done).unwrap();

    e.note_violation(
        day(9, 0),
        &sm,
        ViolationNoted {
            description: "committed generated config without review".into(),
            person: Some(p("dev2")),
            task_type_id: None,
            item_id: None,
        },
    )
    .unwrap();

    e.schedule_human_only(
        day(9, 10),
        &sm,
        &"unit-tests".into(),
        ScheduleHumanOnly {
            item_id: None,
            title: None,
            sprint: Some("S2".into()),
            owner: Some(p("dev1")),
            baseline_effort: 3.0,
        },
    )
    .unwrap();

    e.close_cycle(day(10, 0), &sm).unwrap();

    e.downgrade_rating(
        day(11, 0),
        &sm,
        &"user-docs".into(),
        DowngradeRequest {
            to: Unproven,
            rationale: "two factual errors slipped into the user guide".into(),
        },
    )
    .unwrap();
    e.classify_item(
        day(11, 5),
        &sm,
        ClassifyItem {
            item_id: "DOC-2".into(),
            title: "Install guide refresh".into(),
            task_type_id: "user-docs".into(),
            sprint: Some("S2".into()),
            assessment: None,
            tier: None,
            override_rationale: None,
            owner: Some(p("dev3")),
            baseline_effort: 3.0,
        },
    )
    .unwrap();
    e
}

/// Sprint plan over the scenario's API items.
pub fn api_plan(capacity: Option<f64>) -> SprintPlan {
    SprintPlan {
        schema: tiergate::planning::budget::PLAN_SCHEMA.into(),
        schema_version: tiergate::planning::budget::PLAN_SCHEMA_VERSION,
        sprint_id: "S1".into(),
        items: ["API-1", "API-2", "API-3"].iter().map(|i| backlog(i, "api", None, 8.0)).collect(),
        team_validation_capacity: capacity,
    }
}

pub fn backlog(item: &str, task_type: &str, tier: Option<Tier>, baseline: f64) -> BacklogItem {
    BacklogItem {
        item_id: ItemId::new(item),
        title: item.into(),
        task_type_id: TaskTypeId::new(task_type),
        sprint: None,
        tier,
        owner: None,
        baseline_effort: baseline,
        estimate: None,
        dod: DoDState::default(),
        status: ItemStatus::Planned,
    }
}

/// Every Tier 2+ item names an owner.
pub fn ownership_complete(e: &Engine) -> bool {
    e.snapshot()
        .items
        .values()
        .all(|i| !i.tier.requires_owner() || i.owner.is_some())
}
