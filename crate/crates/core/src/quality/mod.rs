//! Validation outcomes, checklists, sampling and quality metrics.

pub mod checklist;
pub mod erosion;
pub mod injection;
pub mod lint;
pub mod outcome;
pub mod metrics;
pub mod sampling;

pub use checklist::{ChecklistDomain, ChecklistSet, ChecklistTemplate};
pub use erosion::{erosion_check, is_eroding, ErosionPolicy, ErosionStatus, SuggestedItem};
pub use injection::{run_injection_audit, AuditReport, InjectionCampaign, PlantedError};
pub use lint::{lint, LintFinding, LintParams, LintRule};
pub use metrics::{cycle_metrics, CycleMetrics, CycleReport};
pub use outcome::{CheckResult, DetectedIn, Finding, Severity, ValidationOutcome};
pub use sampling::{adjust_sampling, SamplingParams, SamplingPlan};
