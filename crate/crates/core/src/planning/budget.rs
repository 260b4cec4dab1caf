//! Validation capacity budgeting for a sprint plan.
//!
//! When the plan needs more validation than the team can supply, the report
//! proposes deferring items or classifying them at a lower tier. It never
//! proposes cheaper validation.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::effort::{BacklogItem, PlanningError};
use crate::governance::Tier;
use crate::ids::{ItemId, SprintId};

pub const PLAN_SCHEMA: &str = "tiergate.sprint_plan";
pub const PLAN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SprintPlan {
    #[serde(default = "plan_schema")]
    pub schema: String,
    #[serde(default = "plan_version")]
    pub schema_version: u32,
    pub sprint_id: SprintId,
    pub items: Vec<BacklogItem>,
    /// Validation capacity in points. `None` means the team never set one.
    #[serde(default)]
    pub team_validation_capacity: Option<f64>,
}

fn plan_schema() -> String {
    PLAN_SCHEMA.to_string()
}

fn plan_version() -> u32 {
    PLAN_SCHEMA_VERSION
}

#[derive(Debug, thiserror::Error)]
pub enum PlanFileError {
    #[error("reading plan {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing plan: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported plan schema {schema} v{version}")]
    Schema { schema: String, version: u32 },
}

impl SprintPlan {
    pub fn new(sprint_id: SprintId, items: Vec<BacklogItem>, capacity: Option<f64>) -> Self {
        Self {
            schema: plan_schema(),
            schema_version: PLAN_SCHEMA_VERSION,
            sprint_id,
            items,
            team_validation_capacity: capacity,
        }
    }

    /// Sum of validation components over estimated items.
    pub fn required_validation(&self) -> f64 {
        self.items
            .iter()
            .filter_map(|i| i.estimate.as_ref())
            .map(|e| e.validation)
            .sum()
    }

    pub fn from_json(src: &str) -> Result<Self, PlanFileError> {
        let plan: SprintPlan = serde_json::from_str(src)?;
        if plan.schema != PLAN_SCHEMA || plan.schema_version != PLAN_SCHEMA_VERSION {
            return Err(PlanFileError::Schema {
                schema: plan.schema,
                version: plan.schema_version,
            });
        }
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, PlanFileError> {
        let src = std::fs::read_to_string(path).map_err(|source| PlanFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "option", rename_all = "snake_case")]
pub enum AdjustmentOption {
    /// Move the item out of this sprint.
    Defer,
    /// Reclassify at a lower tier, taking the work back toward human execution.
    ClassifyLower { to: Tier },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentHint {
    pub item_id: ItemId,
    pub validation_points: f64,
    pub options: Vec<AdjustmentOption>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub required: f64,
    pub available: f64,
    pub feasible: bool,
    pub deficit: f64,
    pub adjustment_hint: Vec<AdjustmentHint>,
}

/// Compare required validation with team capacity.
pub fn budget_validation(plan: &SprintPlan) -> Result<BudgetReport, PlanningError> {
    let missing: Vec<ItemId> = plan
        .items
        .iter()
        .filter(|i| i.estimate.is_none())
        .map(|i| i.item_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(PlanningError::Unestimated(missing));
    }

    let required = plan.required_validation();
    let available = plan.team_validation_capacity.unwrap_or(0.0);
    let feasible = required <= available + 1e-9;
    let deficit = if feasible { 0.0 } else { required - available };

    let mut adjustment_hint = Vec::new();
    if !feasible {
        let mut candidates: Vec<(&BacklogItem, f64)> = plan
            .items
            .iter()
            .filter_map(|i| {
                let v = i.estimate.as_ref().map_or(0.0, |e| e.validation);
                (v > 0.0).then_some((i, v))
            })
            .collect();
        candidates.sort_by(|(a, va), (b, vb)| {
            vb.partial_cmp(va)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.item_id.cmp(&b.item_id))
        });
        let mut covered = 0.0;
        for (item, v) in candidates {
            if covered >= deficit - 1e-9 {
                break;
            }
            covered += v;
            let mut options = vec![AdjustmentOption::Defer];
            if let Some(tier) = item.tier.filter(|t| t.level() >= 2) {
                options.push(AdjustmentOption::ClassifyLower {
                    to: tier.demoted(1),
                });
            }
            adjustment_hint.push(AdjustmentHint {
                item_id: item.item_id.clone(),
                validation_points: v,
                options,
            });
        }
    }

    Ok(BudgetReport {
        required,
        available,
        feasible,
        deficit,
        adjustment_hint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::effort::{estimate, DoDState, EffortModelParams, ItemStatus};

    fn item(id: &str, tier: Tier, baseline: f64) -> BacklogItem {
        let mut i = BacklogItem {
            item_id: id.into(),
            title: id.into(),
            task_type_id: "t".into(),
            sprint: None,
            tier: Some(tier),
            owner: Some("o".into()),
            baseline_effort: baseline,
            estimate: None,
            dod: DoDState::default(),
            status: ItemStatus::Planned,
        };
        i.estimate = Some(estimate(&i, &EffortModelParams::default(), 0.2).unwrap());
        i
    }

    #[test]
    fn empty_plan_feasible() {
        let r = budget_validation(&SprintPlan::new("s1".into(), vec![], Some(0.0))).unwrap();
        assert_eq!(r.required, 0.0);
        assert!(r.feasible);
    }

    #[test]
    fn required_under_capacity() {
        // 3 x Tier 2 @ 10 points -> 4 validation each = 12
        let items = vec![item("a", Tier::Tier2, 10.0), item("b", Tier::Tier2, 10.0), item("c", Tier::Tier2, 10.0)];
        let r = budget_validation(&SprintPlan::new("s1".into(), items, Some(15.0))).unwrap();
        assert!((r.required - 12.0).abs() < 1e-9);
        assert!(r.feasible);
        assert!(r.adjustment_hint.is_empty());
    }

    #[test]
    fn infeasible_names_largest_items() {
        // validation: a 4, b 8, c 6 = 18 vs 15
        let items = vec![item("a", Tier::Tier2, 10.0), item("b", Tier::Tier2, 20.0), item("c", Tier::Tier2, 15.0)];
        let r = budget_validation(&SprintPlan::new("s1".into(), items, Some(15.0))).unwrap();
        assert!(!r.feasible);
        assert!((r.deficit - 3.0).abs() < 1e-9);
        assert_eq!(r.adjustment_hint.len(), 1);
        assert_eq!(r.adjustment_hint[0].item_id, ItemId::from("b"));
        assert!(r.adjustment_hint[0]
            .options
            .contains(&AdjustmentOption::ClassifyLower { to: Tier::Tier1 }));
    }

    #[test]
    fn unestimated_rejected() {
        let mut i = item("a", Tier::Tier2, 10.0);
        i.estimate = None;
        assert!(matches!(
            budget_validation(&SprintPlan::new("s1".into(), vec![i], Some(5.0))),
            Err(PlanningError::Unestimated(_))
        ));
    }

    #[test]
    fn plan_json_roundtrip_and_schema_check() {
        let p = SprintPlan::new("s1".into(), vec![item("a", Tier::Tier2, 8.0)], Some(4.0));
        let back = SprintPlan::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let bad = p.to_json().replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(SprintPlan::from_json(&bad), Err(PlanFileError::Schema { .. })));
    }
}
