mod common;

use common::*;
use tiergate::governance::{CapabilityRating, Level, Tier};
use tiergate::interface::{ClassifyItem, Engine, EngineError, ErrorClass};
use tiergate::quality::ChecklistDomain;
use tiergate::registry::events::{EventBody, ViolationNoted};
use tiergate::registry::{replay, to_log_text, QueryFilter, ReplayOptions};

fn with_api() -> Engine {
    let mut e = engine();
    register(
        &mut e,
        day(1, 0),
        "api",
        ChecklistDomain::Code,
        a(Level::High, Level::High, Level::Med, CapabilityRating::Established),
        None,
    );
    e
}

#[test]
fn ids_start_at_one_and_timestamps_are_verbatim() {
    let e = with_api();
    assert_eq!(e.events()[0].event_id, 1);
    assert_eq!(e.events()[0].timestamp, day(1, 0));
    assert_eq!(e.snapshot().last_event_id, 1);
}

#[test]
fn blank_actor_is_rejected() {
    let mut e = with_api();
    let err = e
        .note_violation(
            day(1, 1),
            &p("  "),
            ViolationNoted {
                description: "x".into(),
                person: None,
                task_type_id: None,
                item_id: None,
            },
        )
        .unwrap_err();
    assert_eq!(err.class(), ErrorClass::Forbidden);
    assert_eq!(e.events().len(), 1);
}

#[test]
fn tier_two_item_needs_an_owner() {
    let mut e = with_api();
    let err = e
        .classify_item(
            day(1, 1),
            &p("sm"),
            ClassifyItem {
                item_id: "API-1".into(),
                title: "orders".into(),
                task_type_id: "api".into(),
                sprint: None,
                assessment: None,
                tier: None,
                override_rationale: None,
                owner: None,
                baseline_effort: 8.0,
            },
        )
        .unwrap_err();
    assert!(matches!(err, EngineError::Registry(_)), "{err}");
    assert!(ownership_complete(&e));
}

#[test]
fn explicit_override_needs_a_rationale() {
    let mut e = with_api();
    let req = ClassifyItem {
        item_id: "API-1".into(),
        title: "orders".into(),
        task_type_id: "api".into(),
        sprint: None,
        assessment: None,
        tier: Some(Tier::Tier1),
        override_rationale: None,
        owner: Some(p("dev1")),
        baseline_effort: 8.0,
    };
    assert!(e.classify_item(day(1, 1), &p("sm"), req.clone()).is_err());
    let ok = ClassifyItem {
        override_rationale: Some("new engineer owns this one".into()),
        ..req
    };
    e.classify_item(day(1, 1), &p("sm"), ok).unwrap();
    assert_eq!(e.snapshot().items[&"API-1".into()].tier, Tier::Tier1);
}

#[test]
fn violations_land_on_the_board_and_in_queries() {
    let mut e = with_api();
    e.note_violation(
        day(2, 0),
        &p("po"),
        ViolationNoted {
            description: "AI summary sent to client unreviewed".into(),
            person: Some(p("dev4")),
            task_type_id: Some("api".into()),
            item_id: None,
        },
    )
    .unwrap();
    let board = &e.snapshot().board.violations;
    assert_eq!(board.len(), 1);
    assert_eq!(board[0].reported_by, p("po"));

    let mut f = QueryFilter::default();
    f.set("task_type", "api").unwrap();
    let hits = e.query(&f);
    assert!(serde_json::to_string(&hits).unwrap().contains("violation_noted"));
}

#[test]
fn corrupt_line_halts_replay_with_its_id() {
    let e = scenario();
    let mut lines: Vec<String> = to_log_text(e.events()).lines().map(String::from).collect();
    lines[5] = r#"{"event_id":5,"timestamp":"nope"}"#.into();
    let text = lines.join("\n");
    let err = replay(&text, ReplayOptions::default()).unwrap_err();
    assert_eq!(err.corrupt_event_id(), Some(5));

    let r = replay(&text, ReplayOptions { skip_corrupt: true }).unwrap();
    assert_eq!(r.skipped[0].event_id(), Some(5));
    assert!(r.skipped.iter().all(|i| i.event_id() >= Some(5)));
    assert_eq!(r.snapshot.last_event_id, e.snapshot().last_event_id);
    for ev in &r.events {
        assert_eq!(ev, &e.events()[ev.event_id as usize - 1]);
    }
}

#[test]
fn replay_after_every_prefix_matches_live_state() {
    let e = scenario();
    let events = e.events();
    for n in [1, events.len() / 2, events.len()] {
        let r = replay(&to_log_text(&events[..n]), ReplayOptions::default()).unwrap();
        assert_eq!(r.snapshot.last_event_id, events[n - 1].event_id);
    }
}

#[test]
fn demotion_events_carry_no_approver() {
    let e = scenario();
    for ev in e.events() {
        if let EventBody::TransitionApplied(t) = &ev.body {
            let v = serde_json::to_value(t).unwrap();
            assert_eq!(v.get("approved_by").is_some(), t.is_promotion());
        }
    }
}

#[test]
fn file_store_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = team_config();
    cfg.base_dir = dir.path().to_path_buf();
    tiergate::registry::store::FileStore::create(&cfg.registry_path()).unwrap();
    {
        let mut e = Engine::open(cfg.clone()).unwrap();
        register(
            &mut e,
            day(1, 0),
            "api",
            ChecklistDomain::Code,
            a(Level::High, Level::High, Level::Med, CapabilityRating::Established),
            None,
        );
    }
    let e = Engine::open_read_only(cfg).unwrap();
    assert_eq!(e.events().len(), 1);
    assert_eq!(e.snapshot().task_types[&"api".into()].tier, Tier::Tier2);
}
