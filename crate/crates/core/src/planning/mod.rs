//! Effort estimation, capacity budgeting and role scaling.

pub mod budget;
pub mod dod;
pub mod effort;
pub mod scaling;

pub use budget::{budget_validation, AdjustmentHint, AdjustmentOption, BudgetReport, SprintPlan};
pub use effort::{
    estimate, BacklogItem, DoDState, EffortBreakdown, EffortModelParams, ItemStatus, PlanningError,
};
pub use scaling::{scaling_profile, GovernanceFunction, ScalingProfile, TeamSizeBand};
pub use dod::{dod_check, dod_check_with};
