//! Competence-erosion signal: delegated task types that have gone too long
//! without a human-only cycle.

use serde::{Deserialize, Serialize};

use crate::governance::Tier;
use crate::ids::{ItemId, TaskTypeId};
use crate::registry::snapshot::RegistrySnapshot;

pub const DEFAULT_EROSION_THRESHOLD: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErosionPolicy {
    /// Cycles without human-only work before a Tier 2+ type is flagged.
    pub threshold: u32,
}

impl Default for ErosionPolicy {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_EROSION_THRESHOLD,
        }
    }
}

/// AI-restricted item proposed for the next cycle of a flagged type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestedItem {
    pub item_id: ItemId,
    pub title: String,
    pub task_type_id: TaskTypeId,
    pub tier: Tier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErosionStatus {
    pub task_type_id: TaskTypeId,
    pub tier: Tier,
    pub cycles_since_human_only: u32,
    pub threshold: u32,
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_item: Option<SuggestedItem>,
}

/// Whether a type at `tier` with `cycles_since_human_only` needs a human-only cycle.
pub fn is_eroding(tier: Tier, cycles_since_human_only: u32, policy: &ErosionPolicy) -> bool {
    tier.level() >= 2 && cycles_since_human_only >= policy.threshold
}

/// Status of every registered task type.
pub fn erosion_check(snapshot: &RegistrySnapshot, policy: &ErosionPolicy) -> Vec<ErosionStatus> {
    snapshot
        .task_types
        .values()
        .map(|t| {
            let flagged = is_eroding(t.tier, t.cycles_since_human_only, policy);
            ErosionStatus {
                task_type_id: t.task_type_id.clone(),
                tier: t.tier,
                cycles_since_human_only: t.cycles_since_human_only,
                threshold: policy.threshold,
                flagged,
                suggested_item: flagged.then(|| SuggestedItem {
                    item_id: ItemId::new(format!(
                        "{}-human-only-c{}",
                        t.task_type_id, snapshot.current_cycle
                    )),
                    title: format!("Human-only cycle: {}", t.name),
                    task_type_id: t.task_type_id.clone(),
                    tier: Tier::AiRestricted,
                }),
            }
        })
        .collect()
}
