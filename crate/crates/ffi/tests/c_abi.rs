use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use tiergate_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { tg_string_free(s) };
    out
}

fn last_error() -> String {
    let p = tg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn call(engine: *mut TgEngine, op: &str, actor: Option<&str>, target: Option<&str>, body: Option<&str>) -> (TgStatus, Option<String>) {
    let op = CString::new(op).unwrap();
    let actor = actor.map(|a| CString::new(a).unwrap());
    let target = target.map(|t| CString::new(t).unwrap());
    let body = body.map(|b| CString::new(b).unwrap());
    let ts = CString::new("2026-03-02T09:00:00Z").unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe {
        tg_engine_call(
            engine,
            op.as_ptr(),
            actor.as_ref().map_or(ptr::null(), |a| a.as_ptr()),
            ts.as_ptr(),
            target.as_ref().map_or(ptr::null(), |t| t.as_ptr()),
            body.as_ref().map_or(ptr::null(), |b| b.as_ptr()),
            &mut out,
        )
    };
    (status, (status == TgStatus::Ok).then(|| take(out)))
}

#[test]
fn classify_matches_matrix() {
    let mut tier = TgTier::AiRestricted;
    let s = unsafe { tg_classify(TgLevel::High, TgLevel::High, TgLevel::Med, TgCapability::Established, &mut tier) };
    assert_eq!(s, TgStatus::Ok);
    assert_eq!(tier, TgTier::Tier2);
    let s = unsafe { tg_classify(TgLevel::High, TgLevel::High, TgLevel::Low, TgCapability::Unproven, &mut tier) };
    assert_eq!(s, TgStatus::Ok);
    assert_eq!(tier, TgTier::Tier1Pilot);
}

#[test]
fn null_out_pointer_is_reported() {
    let s = unsafe { tg_classify(TgLevel::Low, TgLevel::Low, TgLevel::Low, TgCapability::Mature, ptr::null_mut()) };
    assert_eq!(s, TgStatus::NullArgument);
    assert!(last_error().contains("out_tier"));
}

#[test]
fn escape_rate_and_range_check() {
    let mut r = 0.0;
    assert_eq!(unsafe { tg_analytic_escape_rate(0.2, 0.25, 1.0, 0.5, &mut r) }, TgStatus::Ok);
    assert!((r - 0.075).abs() < 1e-12);
    assert_eq!(unsafe { tg_analytic_escape_rate(1.5, 0.25, 1.0, 0.5, &mut r) }, TgStatus::Invalid);
}

#[test]
fn engine_round_trip_and_error_codes() {
    let mut engine: *mut TgEngine = ptr::null_mut();
    assert_eq!(unsafe { tg_engine_new_in_memory(ptr::null(), &mut engine) }, TgStatus::Ok);

    let reg = r#"{"task_type_id":"api","name":"API endpoints","checklist_domain":"code",
        "assessment":{"structuredness":"high","verifiability":"high","consequence":"med","capability":"unproven"}}"#;
    let (s, out) = call(engine, "register_task_type", Some("ana"), None, Some(reg));
    assert_eq!(s, TgStatus::Ok, "{}", last_error());
    assert!(out.unwrap().contains("\"event_id\":1"));

    let (s, _) = call(engine, "register_task_type", Some("ana"), None, Some(reg));
    assert_eq!(s, TgStatus::Conflict);

    let (s, _) = call(engine, "demote", Some("ana"), Some("nope"), Some(r#"{"rationale":"x"}"#));
    assert_eq!(s, TgStatus::NotFound);

    let (s, _) = call(engine, "register_task_type", Some("ana"), None, Some("{"));
    assert_eq!(s, TgStatus::InvalidJson);

    let (s, _) = call(engine, "frobnicate", None, None, None);
    assert_eq!(s, TgStatus::UnknownOperation);

    let (s, out) = call(engine, "promotion_check", None, Some("api"), None);
    assert_eq!(s, TgStatus::Ok);
    assert!(out.unwrap().contains("insufficient"));

    let mut last = 0;
    assert_eq!(unsafe { tg_engine_last_event_id(engine, &mut last) }, TgStatus::Ok);
    assert_eq!(last, 1);
    unsafe { tg_engine_free(engine) };
}

#[test]
fn simulate_is_reproducible() {
    let cfg = r#"{"seed":3,"cycles":4,"integration_catch_probability":0.5,
        "reviewers":{"detection_probability":0.9,"recovery_on_human_only_cycle":0.9},
        "task_types":[{"id":"t","start_tier":"tier3","true_error_rate":0.1,"outputs_per_cycle":50}]}"#;
    let cfg = CString::new(cfg).unwrap();
    let run = || {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { tg_simulate(cfg.as_ptr(), &mut out) }, TgStatus::Ok, "{}", last_error());
        take(out)
    };
    assert_eq!(run(), run());
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/tiergate.h");
    let src = format!(
        "#include \"{header}\"\nint main(void) {{ TgTier t; TgStatus s = tg_classify(TG_LEVEL_HIGH, TG_LEVEL_HIGH, TG_LEVEL_MED, TG_CAPABILITY_ESTABLISHED, &t); return s == TG_STATUS_OK ? 0 : 1; }}\n"
    );
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("check.c");
    std::fs::write(&file, src).unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&file).output() else {
        eprintln!("no C compiler found; skipping header check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
