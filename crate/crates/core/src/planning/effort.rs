//! Tier-aware effort estimation.
//!
//! Effort is expressed in story points relative to the item's baseline, the
//! estimate a human would give for doing the work without AI. Tier 1 and
//! AI-restricted items keep the baseline. Tier 2 items are specification,
//! generation and validation shares of the baseline. Tier 3 and Tier 4 items
//! budget ongoing monitoring, sampled or audited review, and a reserve for
//! exceptions. Components are kept unrounded; only the total is rounded,
//! half up, to a whole point.

use serde::{Deserialize, Serialize};

use crate::governance::Tier;
use crate::ids::{ItemId, PersonId, SprintId, TaskTypeId};

pub const TIER2_SPEC_RANGE: (f64, f64) = (0.15, 0.30);
pub const TIER2_VALIDATION_RANGE: (f64, f64) = (0.30, 0.60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tier2Effort {
    pub specification: f64,
    pub generation: f64,
    pub validation: f64,
}

impl Default for Tier2Effort {
    fn default() -> Self {
        Self {
            specification: 0.15,
            generation: 0.05,
            validation: 0.40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tier3Effort {
    pub monitoring: f64,
    /// Cost of fully reviewing one output, as a share of baseline.
    pub per_item_validation: f64,
    pub exception_reserve: f64,
}

impl Default for Tier3Effort {
    fn default() -> Self {
        Self {
            monitoring: 0.10,
            per_item_validation: 0.40,
            exception_reserve: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tier4Effort {
    pub boundary_maintenance: f64,
    pub audit: f64,
    pub exceptions: f64,
}

impl Default for Tier4Effort {
    fn default() -> Self {
        Self {
            boundary_maintenance: 0.05,
            audit: 0.05,
            exceptions: 0.05,
        }
    }
}

/// Estimation shares. Tier 3 and Tier 4 defaults are calibration-grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EffortModelParams {
    pub tier2: Tier2Effort,
    pub tier3: Tier3Effort,
    pub tier4: Tier4Effort,
    /// For teams estimating in hours: points per hour. Informational only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_hour: Option<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlanningError {
    #[error("{field} = {value} is outside [{lo}, {hi}]")]
    ParamOutOfRange {
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("item {0} has no tier classification")]
    Unclassified(ItemId),
    #[error("item {item} has non-positive baseline effort {baseline}")]
    NonPositiveBaseline { item: ItemId, baseline: f64 },
    #[error("items without estimates: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    Unestimated(Vec<ItemId>),
    #[error("item {0} is at Tier 2 or above without a named owner")]
    MissingOwner(ItemId),
    #[error("item {0} left planning without a tier classification")]
    UnclassifiedInFlight(ItemId),
    #[error("sampling rate {0} outside (0, 1]")]
    SamplingRate(f64),
}

fn check_range(field: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), PlanningError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(PlanningError::ParamOutOfRange { field, value, lo, hi })
    }
}

impl EffortModelParams {
    pub fn validate(&self) -> Result<(), PlanningError> {
        let (slo, shi) = TIER2_SPEC_RANGE;
        let (vlo, vhi) = TIER2_VALIDATION_RANGE;
        check_range("tier2.specification", self.tier2.specification, slo, shi)?;
        check_range("tier2.validation", self.tier2.validation, vlo, vhi)?;
        check_range("tier2.generation", self.tier2.generation, 0.0, 1.0)?;
        check_range("tier3.monitoring", self.tier3.monitoring, 0.0, 1.0)?;
        check_range("tier3.per_item_validation", self.tier3.per_item_validation, 0.0, 1.0)?;
        check_range("tier3.exception_reserve", self.tier3.exception_reserve, 0.0, 1.0)?;
        check_range("tier4.boundary_maintenance", self.tier4.boundary_maintenance, 0.0, 1.0)?;
        check_range("tier4.audit", self.tier4.audit, 0.0, 1.0)?;
        check_range("tier4.exceptions", self.tier4.exceptions, 0.0, 1.0)?;
        if let Some(pph) = self.points_per_hour {
            check_range("points_per_hour", pph, f64::MIN_POSITIVE, f64::MAX)?;
        }
        Ok(())
    }
}

/// Effort split for one item. `total` is the rounded sum of the parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortBreakdown {
    pub specification: f64,
    pub generation: f64,
    /// Human production effort (Tier 1 and AI-restricted work).
    pub execution: f64,
    pub validation: f64,
    pub integration: f64,
    pub total: u32,
}

impl EffortBreakdown {
    pub fn parts_sum(&self) -> f64 {
        self.specification + self.generation + self.execution + self.validation + self.integration
    }

    fn from_parts(specification: f64, generation: f64, execution: f64, validation: f64, integration: f64) -> Self {
        let mut b = Self {
            specification,
            generation,
            execution,
            validation,
            integration,
            total: 0,
        };
        b.total = round_half_up(b.parts_sum());
        b
    }
}

/// Round half up to a whole point. The epsilon absorbs float noise such as
/// 0.15 * 10 + 0.05 * 10 + 0.40 * 10 landing a hair off an exact half.
pub fn round_half_up(x: f64) -> u32 {
    (x + 0.5 + 1e-9).floor().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    #[default]
    Planned,
    InProgress,
    Validating,
    Done,
}

impl std::str::FromStr for ItemStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").to_ascii_lowercase().as_str() {
            "planned" => Ok(Self::Planned),
            "in_progress" => Ok(Self::InProgress),
            "validating" => Ok(Self::Validating),
            "done" => Ok(Self::Done),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

/// Definition-of-Done conditions. An item is done only when all five hold.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoDState {
    pub validated_per_tier: bool,
    pub provenance_recorded: bool,
    pub owner_confirmed: bool,
    pub integration_verified: bool,
    pub deficiencies_resolved_or_accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_risk_note: Option<String>,
}

impl DoDState {
    pub fn is_done_eligible(&self) -> bool {
        self.validated_per_tier
            && self.provenance_recorded
            && self.owner_confirmed
            && self.integration_verified
            && self.deficiencies_resolved_or_accepted
    }

    /// Names of the conditions that do not hold.
    pub fn unmet(&self) -> Vec<&'static str> {
        [
            ("validated_per_tier", self.validated_per_tier),
            ("provenance_recorded", self.provenance_recorded),
            ("owner_confirmed", self.owner_confirmed),
            ("integration_verified", self.integration_verified),
            (
                "deficiencies_resolved_or_accepted",
                self.deficiencies_resolved_or_accepted,
            ),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacklogItem {
    pub item_id: ItemId,
    pub title: String,
    pub task_type_id: TaskTypeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprint: Option<SprintId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<PersonId>,
    pub baseline_effort: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EffortBreakdown>,
    #[serde(default)]
    pub dod: DoDState,
    #[serde(default)]
    pub status: ItemStatus,
}

impl BacklogItem {
    /// Structural invariants: nothing leaves planning unclassified, and
    /// Tier 2+ work has a named owner.
    pub fn validate(&self) -> Result<(), PlanningError> {
        if self.status != ItemStatus::Planned && self.tier.is_none() {
            return Err(PlanningError::UnclassifiedInFlight(self.item_id.clone()));
        }
        if self.tier.is_some_and(Tier::requires_owner)
            && self.owner.as_ref().map_or(true, PersonId::is_blank)
        {
            return Err(PlanningError::MissingOwner(self.item_id.clone()));
        }
        Ok(())
    }
}

/// Estimate one item. `sampling_rate` applies to Tier 3 items.
pub fn estimate(
    item: &BacklogItem,
    model: &EffortModelParams,
    sampling_rate: f64,
) -> Result<EffortBreakdown, PlanningError> {
    let tier = item
        .tier
        .ok_or_else(|| PlanningError::Unclassified(item.item_id.clone()))?;
    let h = item.baseline_effort;
    if !(h.is_finite() && h > 0.0) {
        return Err(PlanningError::NonPositiveBaseline {
            item: item.item_id.clone(),
            baseline: h,
        });
    }
    if !(sampling_rate > 0.0 && sampling_rate <= 1.0) {
        return Err(PlanningError::SamplingRate(sampling_rate));
    }
    Ok(match tier {
        Tier::AiRestricted | Tier::Tier1Pilot | Tier::Tier1 => {
            EffortBreakdown::from_parts(0.0, 0.0, h, 0.0, 0.0)
        }
        Tier::Tier2 => {
            let t = &model.tier2;
            EffortBreakdown::from_parts(t.specification * h, t.generation * h, 0.0, t.validation * h, 0.0)
        }
        Tier::Tier3 => {
            let t = &model.tier3;
            let validation = t.monitoring * h + sampling_rate * t.per_item_validation * h;
            EffortBreakdown::from_parts(0.0, 0.0, 0.0, validation, t.exception_reserve * h)
        }
        Tier::Tier4 => {
            let t = &model.tier4;
            let validation = (t.boundary_maintenance + t.audit) * h;
            EffortBreakdown::from_parts(0.0, 0.0, 0.0, validation, t.exceptions * h)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(tier: Option<Tier>, baseline: f64) -> BacklogItem {
        BacklogItem {
            item_id: "api-1".into(),
            title: "API endpoint".into(),
            task_type_id: "api".into(),
            sprint: None,
            tier,
            owner: Some("dev-a".into()),
            baseline_effort: baseline,
            estimate: None,
            dod: DoDState::default(),
            status: ItemStatus::Planned,
        }
    }

    #[test]
    fn tier2_eight_points_estimates_five() {
        let e = estimate(&item(Some(Tier::Tier2), 8.0), &EffortModelParams::default(), 0.2).unwrap();
        assert!((e.parts_sum() - 4.8).abs() < 1e-12);
        assert_eq!(e.total, 5);
        assert!((e.validation - 3.2).abs() < 1e-12);
    }

    #[test]
    fn tier1_keeps_baseline() {
        let e = estimate(&item(Some(Tier::Tier1), 8.0), &EffortModelParams::default(), 0.2).unwrap();
        assert_eq!(e.total, 8);
        assert_eq!(e.validation, 0.0);
    }

    #[test]
    fn tier3_hand_computed() {
        // monitoring 1 + 0.2 * 4 + reserve 1 = 2.8
        let e = estimate(&item(Some(Tier::Tier3), 10.0), &EffortModelParams::default(), 0.2).unwrap();
        assert!((e.parts_sum() - 2.8).abs() < 1e-12);
        assert_eq!(e.total, 3);
    }

    #[test]
    fn errors() {
        let m = EffortModelParams::default();
        assert_eq!(
            estimate(&item(None, 8.0), &m, 0.2),
            Err(PlanningError::Unclassified("api-1".into()))
        );
        assert!(matches!(
            estimate(&item(Some(Tier::Tier2), 0.0), &m, 0.2),
            Err(PlanningError::NonPositiveBaseline { .. })
        ));
    }

    #[test]
    fn half_rounds_up() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.4999), 2);
        assert_eq!(round_half_up(0.0), 0);
    }

    #[test]
    fn params_outside_ranges_rejected() {
        let mut m = EffortModelParams::default();
        m.tier2.validation = 0.25;
        assert!(m.validate().is_err());
        let mut m = EffortModelParams::default();
        m.tier2.specification = 0.31;
        assert!(m.validate().is_err());
        EffortModelParams::default().validate().unwrap();
    }

    #[test]
    fn item_invariants() {
        let mut i = item(None, 3.0);
        i.status = ItemStatus::InProgress;
        assert!(matches!(i.validate(), Err(PlanningError::UnclassifiedInFlight(_))));
        let mut i = item(Some(Tier::Tier2), 3.0);
        i.owner = None;
        assert!(matches!(i.validate(), Err(PlanningError::MissingOwner(_))));
    }

    #[test]
    fn dod_unmet_lists_names() {
        let d = DoDState {
            validated_per_tier: true,
            provenance_recorded: true,
            owner_confirmed: false,
            integration_verified: true,
            deficiencies_resolved_or_accepted: true,
            accepted_risk_note: None,
        };
        assert!(!d.is_done_eligible());
        assert_eq!(d.unmet(), vec!["owner_confirmed"]);
    }
}
