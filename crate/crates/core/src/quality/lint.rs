//! Process lint: the common early-adoption mistakes and registry rules,
//! checked against a snapshot and an optional sprint plan.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::erosion::{erosion_check, ErosionPolicy};
use crate::governance::{CapabilityRating, Tier, TransitionPolicy};
use crate::planning::{ItemStatus, SprintPlan};
use crate::registry::snapshot::RegistrySnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LintRule {
    TooManyHighTierStarts,
    ValidationNotBudgeted,
    PerformativeOwnership,
    UnclassifiedItem,
    ErosionIgnored,
    RegistryViolationPattern,
}

impl LintRule {
    pub const ALL: [LintRule; 6] = [
        LintRule::TooManyHighTierStarts,
        LintRule::ValidationNotBudgeted,
        LintRule::PerformativeOwnership,
        LintRule::UnclassifiedItem,
        LintRule::ErosionIgnored,
        LintRule::RegistryViolationPattern,
    ];

    pub fn id(self) -> &'static str {
        match self {
            LintRule::TooManyHighTierStarts => "too_many_high_tier_starts",
            LintRule::ValidationNotBudgeted => "validation_not_budgeted",
            LintRule::PerformativeOwnership => "performative_ownership",
            LintRule::UnclassifiedItem => "unclassified_item",
            LintRule::ErosionIgnored => "erosion_ignored",
            LintRule::RegistryViolationPattern => "registry_violation_pattern",
        }
    }
}

impl fmt::Display for LintRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub rule: LintRule,
    pub subject: String,
    pub explanation: String,
}

impl fmt::Display for LintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.subject, self.explanation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LintParams {
    /// Cycles an owner may hold Tier 2+ items with no recorded review.
    pub ownership_idle_cycles: u32,
    /// Window, in cycles, for counting repeated violations.
    pub violation_window_cycles: u32,
    /// Violations within the window that make a pattern.
    pub violation_pattern_count: u32,
}

impl Default for LintParams {
    fn default() -> Self {
        Self {
            ownership_idle_cycles: 2,
            violation_window_cycles: 3,
            violation_pattern_count: 2,
        }
    }
}

pub fn lint(
    snapshot: &RegistrySnapshot,
    plan: Option<&SprintPlan>,
    policy: &TransitionPolicy,
    erosion: &ErosionPolicy,
    params: &LintParams,
) -> Vec<LintFinding> {
    let mut out = Vec::new();
    let mut push = |rule, subject: String, explanation: String| {
        out.push(LintFinding {
            rule,
            subject,
            explanation,
        })
    };

    // 1. Tier 3+ without the track record to justify it.
    for t in snapshot.task_types.values() {
        let rating = t.effective_rating(policy);
        if t.tier.level() >= 3 && rating <= CapabilityRating::Emerging {
            push(
                LintRule::TooManyHighTierStarts,
                t.task_type_id.to_string(),
                format!("task type is at {} with capability rating {rating}", t.tier),
            );
        }
    }

    // 2. Validation left out of the plan.
    if let Some(plan) = plan {
        let governed: Vec<_> = plan
            .items
            .iter()
            .filter(|i| i.tier.is_some_and(|t| t.level() >= 2))
            .collect();
        if !governed.is_empty() {
            if plan.team_validation_capacity.is_none() {
                push(
                    LintRule::ValidationNotBudgeted,
                    plan.sprint_id.to_string(),
                    "plan has Tier 2+ items but no validation capacity figure".into(),
                );
            }
            for i in governed {
                if i.estimate.as_ref().map_or(true, |e| e.validation <= 0.0) {
                    push(
                        LintRule::ValidationNotBudgeted,
                        i.item_id.to_string(),
                        "Tier 2+ item has no validation effort in its estimate".into(),
                    );
                }
            }
        }
    }

    // 3. Owners who never engage with their Tier 2+ items.
    let mut owned: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for i in snapshot.items.values().filter(|i| {
        i.tier.requires_owner()
            && snapshot.current_cycle.saturating_sub(i.classified_cycle) >= params.ownership_idle_cycles
    }) {
        if let Some(o) = &i.owner {
            owned.entry(o.clone()).or_default().push(i);
        }
    }
    for (owner, items) in owned {
        if items
            .iter()
            .all(|i| snapshot.outcomes_for(&i.item_id).next().is_none())
        {
            push(
                LintRule::PerformativeOwnership,
                owner.to_string(),
                format!(
                    "owns {} Tier 2+ item(s) with no recorded review outcome after {} or more cycles",
                    items.len(),
                    params.ownership_idle_cycles
                ),
            );
        }
    }

    // 4. Work in flight without a tier.
    if let Some(plan) = plan {
        for i in &plan.items {
            if i.tier.is_none() && i.status != ItemStatus::Planned {
                push(
                    LintRule::UnclassifiedItem,
                    i.item_id.to_string(),
                    "item is in progress without a tier classification".into(),
                );
            }
        }
    }

    // 5. Erosion flag carried past a cycle with nothing human-only scheduled.
    for s in erosion_check(snapshot, erosion) {
        if !s.flagged || s.cycles_since_human_only <= s.threshold {
            continue;
        }
        let scheduled = snapshot.items.values().any(|i| {
            i.task_type_id == s.task_type_id && i.tier == Tier::AiRestricted && i.is_open()
        });
        if !scheduled {
            push(
                LintRule::ErosionIgnored,
                s.task_type_id.to_string(),
                format!(
                    "{} cycles without a human-only cycle and none scheduled",
                    s.cycles_since_human_only
                ),
            );
        }
    }

    // 6. Repeated registry violations.
    let window_start = snapshot
        .current_cycle
        .saturating_sub(params.violation_window_cycles.saturating_sub(1));
    let mut by_subject: BTreeMap<String, u32> = BTreeMap::new();
    for v in snapshot.board.violations.iter().filter(|v| v.cycle >= window_start) {
        if let Some(p) = &v.violation.person {
            *by_subject.entry(format!("person {p}")).or_default() += 1;
        }
        if let Some(t) = &v.violation.task_type_id {
            *by_subject.entry(format!("task type {t}")).or_default() += 1;
        }
    }
    for (subject, n) in by_subject {
        if n >= params.violation_pattern_count {
            push(
                LintRule::RegistryViolationPattern,
                subject,
                format!(
                    "{n} violations within the last {} cycles",
                    params.violation_window_cycles
                ),
            );
        }
    }

    out
}
