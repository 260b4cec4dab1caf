//! Spreadsheet-friendly CSV exports, one table per entity.

use std::str::FromStr;

use super::snapshot::RegistrySnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    TaskTypes,
    Items,
    Outcomes,
    Transitions,
    Violations,
    Ledger,
}

impl Entity {
    pub const ALL: [Entity; 6] = [
        Entity::TaskTypes,
        Entity::Items,
        Entity::Outcomes,
        Entity::Transitions,
        Entity::Violations,
        Entity::Ledger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Entity::TaskTypes => "task_types",
            Entity::Items => "items",
            Entity::Outcomes => "outcomes",
            Entity::Transitions => "transitions",
            Entity::Violations => "violations",
            Entity::Ledger => "ledger",
        }
    }
}

impl FromStr for Entity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Entity::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| format!("unknown entity {s:?}"))
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn rate(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.4}")).unwrap_or_default()
}

pub fn export_csv(snapshot: &RegistrySnapshot, entity: Entity) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |fields: Vec<String>| w.write_record(&fields).expect("writing to memory");
    match entity {
        Entity::TaskTypes => {
            row(
                ["task_type_id", "name", "tier", "rating_floor", "sampling_rate", "cycles_since_human_only", "ledger_cycles"]
                    .map(String::from)
                    .to_vec(),
            );
            for t in snapshot.task_types.values() {
                row(vec![
                    t.task_type_id.to_string(),
                    t.name.clone(),
                    t.tier.slug().to_string(),
                    t.rating_floor.to_string(),
                    format!("{}", t.sampling.rate),
                    t.cycles_since_human_only.to_string(),
                    t.ledger.len().to_string(),
                ]);
            }
        }
        Entity::Items => {
            row(
                ["item_id", "title", "task_type_id", "sprint", "tier", "default_tier", "owner", "status", "baseline_effort", "override_rationale"]
                    .map(String::from)
                    .to_vec(),
            );
            for i in snapshot.items.values() {
                row(vec![
                    i.item_id.to_string(),
                    i.title.clone(),
                    i.task_type_id.to_string(),
                    opt(&i.sprint),
                    i.tier.slug().to_string(),
                    i.default_tier.slug().to_string(),
                    opt(&i.owner),
                    serde_json::to_value(i.status).expect("status").as_str().unwrap_or("").to_string(),
                    format!("{}", i.baseline_effort),
                    opt(&i.override_rationale),
                ]);
            }
        }
        Entity::Outcomes => {
            row(
                ["event_id", "cycle", "item_id", "task_type_id", "reviewer", "detected_in", "first_pass_accept", "findings", "max_severity", "review_minutes"]
                    .map(String::from)
                    .to_vec(),
            );
            for o in &snapshot.outcomes {
                let v = &o.outcome;
                row(vec![
                    o.event_id.to_string(),
                    o.cycle.to_string(),
                    v.item_id.to_string(),
                    o.task_type_id.to_string(),
                    v.reviewer.to_string(),
                    serde_json::to_value(v.detected_in).expect("channel").as_str().unwrap_or("").to_string(),
                    v.first_pass_accept.to_string(),
                    v.findings.len().to_string(),
                    opt(&v.findings.iter().map(|f| f.severity).max()),
                    v.review_minutes.to_string(),
                ]);
            }
        }
        Entity::Transitions => {
            row(
                ["cycle", "task_type_id", "direction", "from_tier", "to_tier", "trigger", "requested_by", "rationale"]
                    .map(String::from)
                    .to_vec(),
            );
            for t in &snapshot.transitions {
                row(vec![
                    t.cycle.to_string(),
                    t.task_type_id.to_string(),
                    if t.is_promotion() { "promotion" } else { "demotion" }.to_string(),
                    t.from_tier.slug().to_string(),
                    t.to_tier.slug().to_string(),
                    serde_json::to_value(t.trigger()).expect("trigger").as_str().unwrap_or("").to_string(),
                    t.requested_by.to_string(),
                    t.rationale.clone(),
                ]);
            }
        }
        Entity::Violations => {
            row(
                ["event_id", "cycle", "reported_by", "person", "task_type_id", "item_id", "description"]
                    .map(String::from)
                    .to_vec(),
            );
            for v in &snapshot.board.violations {
                row(vec![
                    v.event_id.to_string(),
                    v.cycle.to_string(),
                    v.reported_by.to_string(),
                    opt(&v.violation.person),
                    opt(&v.violation.task_type_id),
                    opt(&v.violation.item_id),
                    v.violation.description.clone(),
                ]);
            }
        }
        Entity::Ledger => {
            row(
                ["task_type_id", "cycle", "tier", "outputs_validated", "outputs_with_major_or_critical", "critical_count", "error_rate", "sampled_fraction"]
                    .map(String::from)
                    .to_vec(),
            );
            for t in snapshot.task_types.values() {
                for c in t.ledger.cycles() {
                    row(vec![
                        t.task_type_id.to_string(),
                        c.cycle_index.to_string(),
                        c.tier_during_cycle.slug().to_string(),
                        c.outputs_validated.to_string(),
                        c.outputs_with_major_or_critical.to_string(),
                        c.critical_count.to_string(),
                        rate(c.error_rate()),
                        format!("{}", c.sampled_fraction),
                    ]);
                }
            }
        }
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}
