//! Per-cycle quality metrics for a task type.

use serde::{Deserialize, Serialize};

use super::outcome::ValidationOutcome;
use crate::governance::{CycleSummary, Tier};
use crate::ids::TaskTypeId;
use crate::registry::snapshot::{RegistrySnapshot, SchemaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    pub task_type_id: TaskTypeId,
    pub cycle: u32,
    pub tier_during_cycle: Tier,
    /// Outcomes from review or sampling.
    pub outputs_validated: u32,
    pub first_pass_accepted: u32,
    /// `None` when nothing was validated (only escapes were recorded).
    pub first_pass_rate: Option<f64>,
    pub error_rate: Option<f64>,
    pub critical_count: u32,
    pub mean_review_minutes: Option<f64>,
    /// Errors found at integration or after delivery.
    pub escapes: u32,
    pub summary: CycleSummary,
}

/// Metrics for one cycle, or an explicit marker when nothing was recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CycleReport {
    Measured(CycleMetrics),
    Empty { task_type_id: TaskTypeId, cycle: u32 },
}

impl CycleReport {
    pub fn metrics(&self) -> Option<&CycleMetrics> {
        match self {
            CycleReport::Measured(m) => Some(m),
            CycleReport::Empty { .. } => None,
        }
    }
}

fn outcomes_in<'a>(
    snapshot: &'a RegistrySnapshot,
    task_type: &'a TaskTypeId,
    cycle: u32,
) -> impl Iterator<Item = &'a ValidationOutcome> {
    snapshot
        .outcomes
        .iter()
        .filter(move |r| r.cycle == cycle && &r.task_type_id == task_type)
        .map(|r| &r.outcome)
}

/// Ledger entry for a cycle, counting review and sampling outcomes.
pub fn summary_for_cycle(
    snapshot: &RegistrySnapshot,
    task_type: &TaskTypeId,
    cycle: u32,
    tier: Tier,
    sampled_fraction: f64,
) -> CycleSummary {
    let mut s = CycleSummary {
        cycle_index: cycle,
        tier_during_cycle: tier,
        outputs_validated: 0,
        outputs_with_major_or_critical: 0,
        critical_count: 0,
        sampled_fraction,
    };
    for o in outcomes_in(snapshot, task_type, cycle).filter(|o| o.detected_in.is_validation()) {
        s.outputs_validated += 1;
        if o.has_major_or_critical() {
            s.outputs_with_major_or_critical += 1;
        }
        if o.critical_count() > 0 {
            s.critical_count += 1;
        }
    }
    s
}

/// Escapes recorded for a task type in a cycle.
pub fn escapes_in(snapshot: &RegistrySnapshot, task_type: &TaskTypeId, cycle: u32) -> u32 {
    outcomes_in(snapshot, task_type, cycle)
        .filter(|o| o.detected_in.is_escape())
        .count() as u32
}

pub fn cycle_metrics(
    task_type: &TaskTypeId,
    cycle: u32,
    snapshot: &RegistrySnapshot,
) -> Result<CycleReport, SchemaError> {
    let tt = snapshot.task_type(task_type)?;
    let all: Vec<&ValidationOutcome> = outcomes_in(snapshot, task_type, cycle).collect();
    if all.is_empty() {
        return Ok(CycleReport::Empty {
            task_type_id: task_type.clone(),
            cycle,
        });
    }

    let summary = match tt.ledger.cycles().iter().find(|c| c.cycle_index == cycle) {
        Some(closed) => closed.clone(),
        None => {
            let tier = if cycle == snapshot.current_cycle {
                tt.cycle_start_tier
            } else {
                tt.tier
            };
            let sampled = if tier == Tier::Tier3 { tt.sampling.rate } else { 1.0 };
            summary_for_cycle(snapshot, task_type, cycle, tier, sampled)
        }
    };

    let validated: Vec<&&ValidationOutcome> =
        all.iter().filter(|o| o.detected_in.is_validation()).collect();
    let n = validated.len() as u32;
    let first_pass = validated.iter().filter(|o| o.first_pass_accept).count() as u32;
    let minutes: u64 = validated.iter().map(|o| o.review_minutes as u64).sum();
    let ratio = |num: u32| (n > 0).then(|| num as f64 / n as f64);

    Ok(CycleReport::Measured(CycleMetrics {
        task_type_id: task_type.clone(),
        cycle,
        tier_during_cycle: summary.tier_during_cycle,
        outputs_validated: n,
        first_pass_accepted: first_pass,
        first_pass_rate: ratio(first_pass),
        error_rate: summary.error_rate(),
        critical_count: summary.critical_count,
        mean_review_minutes: (n > 0).then(|| minutes as f64 / n as f64),
        escapes: all.iter().filter(|o| o.detected_in.is_escape()).count() as u32,
        summary,
    }))
}
