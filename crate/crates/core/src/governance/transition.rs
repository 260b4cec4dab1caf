//! Asymmetric tier transitions: evidence-gated single-step promotion and
//! immediate demotion.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::evidence::{CycleSummary, EvidenceLedger};
use super::levels::Tier;
use super::policy::TransitionPolicy;
use crate::ids::{PersonId, TaskTypeId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemotionTrigger {
    CriticalError,
    ConsecutiveBreach,
    CapacityShortfall,
    MemberRequest,
}

impl fmt::Display for DemotionTrigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemotionTrigger::CriticalError => "critical_error",
            DemotionTrigger::ConsecutiveBreach => "consecutive_breach",
            DemotionTrigger::CapacityShortfall => "capacity_shortfall",
            DemotionTrigger::MemberRequest => "member_request",
        })
    }
}

impl std::str::FromStr for DemotionTrigger {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").as_str() {
            "critical_error" => Ok(Self::CriticalError),
            "consecutive_breach" => Ok(Self::ConsecutiveBreach),
            "capacity_shortfall" => Ok(Self::CapacityShortfall),
            "member_request" => Ok(Self::MemberRequest),
            other => Err(format!("unknown demotion trigger {other:?}")),
        }
    }
}

/// Direction-specific part of a transition.
///
/// Demotions have no approval field at all: any team member may apply one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "direction", rename_all = "snake_case")]
pub enum TransitionKind {
    Promotion {
        evidence_snapshot: Vec<CycleSummary>,
        approved_by: PersonId,
    },
    Demotion {
        trigger: DemotionTrigger,
        evidence_snapshot: Vec<CycleSummary>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    EvidenceReview,
    CriticalError,
    ConsecutiveBreach,
    CapacityShortfall,
    MemberRequest,
}

impl From<DemotionTrigger> for Trigger {
    fn from(t: DemotionTrigger) -> Self {
        match t {
            DemotionTrigger::CriticalError => Trigger::CriticalError,
            DemotionTrigger::ConsecutiveBreach => Trigger::ConsecutiveBreach,
            DemotionTrigger::CapacityShortfall => Trigger::CapacityShortfall,
            DemotionTrigger::MemberRequest => Trigger::MemberRequest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub task_type_id: TaskTypeId,
    pub from_tier: Tier,
    pub to_tier: Tier,
    #[serde(flatten)]
    pub kind: TransitionKind,
    pub requested_by: PersonId,
    /// Cycle in which the transition takes effect.
    pub cycle: u32,
    pub rationale: String,
    pub timestamp: Timestamp,
}

impl TransitionEvent {
    pub fn is_promotion(&self) -> bool {
        matches!(self.kind, TransitionKind::Promotion { .. })
    }

    pub fn trigger(&self) -> Trigger {
        match &self.kind {
            TransitionKind::Promotion { .. } => Trigger::EvidenceReview,
            TransitionKind::Demotion { trigger, .. } => (*trigger).into(),
        }
    }

    pub fn evidence(&self) -> &[CycleSummary] {
        match &self.kind {
            TransitionKind::Promotion {
                evidence_snapshot, ..
            }
            | TransitionKind::Demotion {
                evidence_snapshot, ..
            } => evidence_snapshot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "blocker", rename_all = "snake_case")]
pub enum PromotionBlocker {
    AtTopTier,
    /// AI-restricted is lifted by reclassification, not by evidence.
    AiRestricted,
    InsufficientCycles { have: u32, need: u32 },
    MissingQualityData { cycle: u32 },
    ErrorRateAboveThreshold { cycle: u32, rate: f64, threshold: f64 },
    CriticalErrorInWindow { cycle: u32, count: u32 },
    CapacityNotConfirmed,
}

impl fmt::Display for PromotionBlocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromotionBlocker::AtTopTier => f.write_str("already at Tier 4"),
            PromotionBlocker::AiRestricted => {
                f.write_str("AI-restricted task types are reclassified, not promoted")
            }
            PromotionBlocker::InsufficientCycles { have, need } => {
                write!(f, "insufficient cycles: {have} at current tier, needs {need}")
            }
            PromotionBlocker::MissingQualityData { cycle } => {
                write!(f, "no validated outputs recorded in cycle {cycle}")
            }
            PromotionBlocker::ErrorRateAboveThreshold {
                cycle,
                rate,
                threshold,
            } => write!(
                f,
                "error rate {:.1}% in cycle {cycle} is not below the {:.1}% threshold",
                rate * 100.0,
                threshold * 100.0
            ),
            PromotionBlocker::CriticalErrorInWindow { cycle, count } => {
                write!(f, "critical error present: {count} in cycle {cycle}")
            }
            PromotionBlocker::CapacityNotConfirmed => f.write_str(
                "validation function has not confirmed the next tier's protocol is resourced",
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionEligibility {
    pub current_tier: Tier,
    pub proposed_tier: Option<Tier>,
    pub eligible: bool,
    pub blockers: Vec<PromotionBlocker>,
    /// Cycles examined: the most recent minimum-length window at the current tier.
    pub window: Vec<CycleSummary>,
}

/// Whether a single-step promotion from `current` is supported by the ledger.
///
/// The evaluation window is the last `n` cycles at the current tier, where
/// `n` is the policy minimum for the step.
pub fn check_promotion(
    current: Tier,
    ledger: &EvidenceLedger,
    policy: &TransitionPolicy,
    capacity_ok: bool,
) -> PromotionEligibility {
    let mut blockers = Vec::new();
    let proposed = current.next();
    let min = policy.min_cycles_from(current);

    let window: Vec<CycleSummary> = match min {
        None => {
            blockers.push(if current == Tier::AiRestricted {
                PromotionBlocker::AiRestricted
            } else {
                PromotionBlocker::AtTopTier
            });
            Vec::new()
        }
        Some(need) => {
            let at_tier = ledger.trailing_at(current);
            let have = at_tier.len() as u32;
            if have < need {
                blockers.push(PromotionBlocker::InsufficientCycles { have, need });
            }
            let window = &at_tier[at_tier.len().saturating_sub(need as usize)..];
            let threshold = policy.threshold(current).unwrap_or(0.0);
            for c in window {
                match c.error_rate() {
                    None => blockers.push(PromotionBlocker::MissingQualityData {
                        cycle: c.cycle_index,
                    }),
                    Some(rate) if rate >= threshold => {
                        blockers.push(PromotionBlocker::ErrorRateAboveThreshold {
                            cycle: c.cycle_index,
                            rate,
                            threshold,
                        })
                    }
                    Some(_) => {}
                }
                if c.critical_count > 0 {
                    blockers.push(PromotionBlocker::CriticalErrorInWindow {
                        cycle: c.cycle_index,
                        count: c.critical_count,
                    });
                }
            }
            window.to_vec()
        }
    };

    if !capacity_ok {
        blockers.push(PromotionBlocker::CapacityNotConfirmed);
    }

    PromotionEligibility {
        current_tier: current,
        proposed_tier: proposed,
        eligible: blockers.is_empty(),
        blockers,
        window,
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TransitionError {
    #[error("promotion blocked: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    PromotionBlocked(Vec<PromotionBlocker>),
    #[error("task type is already AI-restricted")]
    AlreadyRestricted,
    #[error("requester must be a named person")]
    AnonymousRequester,
}

/// Build the promotion event for a human decision at retrospective.
#[allow(clippy::too_many_arguments)]
pub fn apply_promotion(
    task_type_id: &TaskTypeId,
    current: Tier,
    ledger: &EvidenceLedger,
    policy: &TransitionPolicy,
    capacity_ok: bool,
    approved_by: &PersonId,
    cycle: u32,
    rationale: impl Into<String>,
    timestamp: Timestamp,
) -> Result<TransitionEvent, TransitionError> {
    if approved_by.is_blank() {
        return Err(TransitionError::AnonymousRequester);
    }
    let eligibility = check_promotion(current, ledger, policy, capacity_ok);
    if !eligibility.eligible {
        return Err(TransitionError::PromotionBlocked(eligibility.blockers));
    }
    let to = eligibility
        .proposed_tier
        .expect("eligible promotions always have a next tier");
    Ok(TransitionEvent {
        task_type_id: task_type_id.clone(),
        from_tier: current,
        to_tier: to,
        kind: TransitionKind::Promotion {
            evidence_snapshot: eligibility.window,
            approved_by: approved_by.clone(),
        },
        requested_by: approved_by.clone(),
        cycle,
        rationale: rationale.into(),
        timestamp,
    })
}

/// Immediate demotion. Needs no eligibility check and no approval.
#[allow(clippy::too_many_arguments)]
pub fn apply_demotion(
    task_type_id: &TaskTypeId,
    current: Tier,
    trigger: DemotionTrigger,
    requested_by: &PersonId,
    policy: &TransitionPolicy,
    cycle: u32,
    evidence: Vec<CycleSummary>,
    rationale: impl Into<String>,
    timestamp: Timestamp,
) -> Result<TransitionEvent, TransitionError> {
    if requested_by.is_blank() {
        return Err(TransitionError::AnonymousRequester);
    }
    if current == Tier::AiRestricted {
        return Err(TransitionError::AlreadyRestricted);
    }
    let depth = match trigger {
        DemotionTrigger::CriticalError => policy.critical_error_demotion_depth,
        _ => 1,
    };
    Ok(TransitionEvent {
        task_type_id: task_type_id.clone(),
        from_tier: current,
        to_tier: current.demoted(depth),
        kind: TransitionKind::Demotion {
            trigger,
            evidence_snapshot: evidence,
        },
        requested_by: requested_by.clone(),
        cycle,
        rationale: rationale.into(),
        timestamp,
    })
}
