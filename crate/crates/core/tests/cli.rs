use std::path::Path;

use tiergate::interface::cli::{run, EXIT_DOMAIN, EXIT_LINT, EXIT_OK, EXIT_USAGE};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn tg(dir: &Path, args: &[&str]) -> Out {
    let config = dir.join("tiergate.toml");
    let mut full = vec!["tiergate".to_string(), "--config".into(), config.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(full, &mut std::io::empty(), &mut out, &mut err);
    Out {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = tg(dir.path(), &["init", "--dir", &d]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let o = tg(
        dir.path(),
        &[
            "--as", "sm", "--at", "2026-03-02T09:00:00Z", "register", "api", "--name", "API endpoints",
            "--domain", "code", "--s", "high", "--v", "high", "--c", "med", "--d", "established",
            "--baseline-evidence", "pilot sprint",
        ],
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    for (n, item) in ["API-1", "API-2", "API-3"].iter().enumerate() {
        let at = format!("2026-03-02T09:0{}:00Z", n + 1);
        let o = tg(
            dir.path(),
            &[
                "--as", "sm", "--at", &at, "classify", "--item", item, "--title", item, "--type", "api",
                "--owner", "dev1", "--baseline", "8",
            ],
        );
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    }
    dir
}

fn write_plan(dir: &Path, capacity: Option<f64>) -> String {
    let items: Vec<_> = ["API-1", "API-2", "API-3"]
        .iter()
        .map(|i| serde_json::json!({"item_id": i, "title": i, "task_type_id": "api", "baseline_effort": 8.0}))
        .collect();
    let plan = serde_json::json!({"sprint_id": "S1", "team_validation_capacity": capacity, "items": items});
    let path = dir.join("plan.json");
    std::fs::write(&path, plan.to_string()).unwrap();
    path.display().to_string()
}

#[test]
fn classify_preview_prints_tier_two() {
    let dir = workspace();
    let o = tg(dir.path(), &["classify", "--s", "high", "--v", "high", "--c", "med", "--d", "established"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.starts_with("Tier 2"), "{}", o.stdout);
}

#[test]
fn preview_prompts_for_missing_values() {
    let dir = workspace();
    let config = dir.path().join("tiergate.toml").display().to_string();
    let args = ["tiergate", "--config", &config, "classify", "--s", "high", "--v", "high"];
    let mut input = "low\nmature\n".as_bytes();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args, &mut input, &mut out, &mut err);
    assert_eq!(code, EXIT_OK, "{}", String::from_utf8_lossy(&err));
    assert!(String::from_utf8(out).unwrap().starts_with("Tier 4"));
}

#[test]
fn plan_estimates_and_flags_infeasible_budget() {
    let dir = workspace();
    let plan = write_plan(dir.path(), Some(12.0));
    let o = tg(dir.path(), &["--json", "plan", &plan]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["items"][0]["estimate"]["total"], 5);
    assert_eq!(v["budget"]["feasible"], true);

    let plan = write_plan(dir.path(), Some(4.0));
    let o = tg(dir.path(), &["plan", &plan]);
    assert_eq!(o.code, EXIT_DOMAIN);
}

#[test]
fn lint_exit_codes() {
    let dir = workspace();
    let plan = write_plan(dir.path(), Some(12.0));
    assert_eq!(tg(dir.path(), &["lint", "--plan", &plan]).code, EXIT_OK);
    let plan = write_plan(dir.path(), None);
    let o = tg(dir.path(), &["lint", "--plan", &plan]);
    assert_eq!(o.code, EXIT_LINT);
    assert!(o.stdout.contains("validation_not_budgeted"), "{}", o.stdout);
}

#[test]
fn unknown_command_is_a_usage_error() {
    let dir = workspace();
    assert_eq!(tg(dir.path(), &["frobnicate"]).code, EXIT_USAGE);
}

#[test]
fn critical_finding_demotes_immediately() {
    let dir = workspace();
    let o = tg(
        dir.path(),
        &[
            "--as", "sm", "--at", "2026-03-03T10:00:00Z", "record", "--item", "API-1", "--reviewer", "dev2",
            "--minutes", "20", "--detected-in", "review", "--finding", "critical:security:sql injection",
        ],
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let lines: Vec<_> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 3, "{}", o.stdout);
    assert!(lines[1].contains("demotion_prompted"));
    assert!(lines[2].contains("\"to_tier\":\"tier1\""));
}

#[test]
fn cli_writes_survive_reload() {
    let dir = workspace();
    let o = tg(dir.path(), &["--json", "events"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    let log = std::fs::read_to_string(dir.path().join("registry.jsonl")).unwrap();
    assert!(log.lines().any(|l| l.contains("\"item_id\":\"API-3\"")));
}
