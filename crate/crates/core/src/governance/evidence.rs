//! Per-task-type evidence ledger and capability-rating derivation.

use serde::{Deserialize, Serialize};

use super::levels::{CapabilityRating, Tier};
use super::policy::TransitionPolicy;

/// Quality data for one task type over one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub cycle_index: u32,
    pub tier_during_cycle: Tier,
    pub outputs_validated: u32,
    pub outputs_with_major_or_critical: u32,
    pub critical_count: u32,
    pub sampled_fraction: f64,
}

impl CycleSummary {
    /// Fraction of validated outputs carrying at least one major or critical
    /// finding. `None` when nothing was validated.
    pub fn error_rate(&self) -> Option<f64> {
        (self.outputs_validated > 0)
            .then(|| self.outputs_with_major_or_critical as f64 / self.outputs_validated as f64)
    }

    /// Below the tier threshold, zero criticals, and actually measured.
    pub fn is_clean(&self, policy: &TransitionPolicy) -> bool {
        match (self.error_rate(), policy.threshold(self.tier_during_cycle)) {
            (Some(rate), Some(threshold)) => self.critical_count == 0 && rate < threshold,
            _ => false,
        }
    }

    /// Error rate strictly above the tier threshold.
    pub fn is_breach(&self, policy: &TransitionPolicy) -> bool {
        match (self.error_rate(), policy.threshold(self.tier_during_cycle)) {
            (Some(rate), Some(threshold)) => rate > threshold,
            _ => false,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LedgerError {
    #[error("cycle {got} does not follow cycle {last}")]
    NonIncreasingCycle { last: u32, got: u32 },
    #[error("cycle {cycle}: {flagged} outputs flagged but only {validated} validated")]
    FlaggedExceedsValidated {
        cycle: u32,
        flagged: u32,
        validated: u32,
    },
    #[error("cycle {cycle}: {critical} critical findings but only {flagged} flagged outputs")]
    CriticalExceedsFlagged {
        cycle: u32,
        critical: u32,
        flagged: u32,
    },
    #[error("cycle {cycle}: sampled fraction {value} outside [0, 1]")]
    SampledFraction { cycle: u32, value: f64 },
}

/// Ordered cycle summaries for one task type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceLedger {
    cycles: Vec<CycleSummary>,
}

impl EvidenceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_cycles(cycles: Vec<CycleSummary>) -> Result<Self, LedgerError> {
        let mut ledger = Self::new();
        for c in cycles {
            ledger.push(c)?;
        }
        Ok(ledger)
    }

    pub fn push(&mut self, summary: CycleSummary) -> Result<(), LedgerError> {
        if let Some(last) = self.cycles.last() {
            if summary.cycle_index <= last.cycle_index {
                return Err(LedgerError::NonIncreasingCycle {
                    last: last.cycle_index,
                    got: summary.cycle_index,
                });
            }
        }
        if summary.outputs_with_major_or_critical > summary.outputs_validated {
            return Err(LedgerError::FlaggedExceedsValidated {
                cycle: summary.cycle_index,
                flagged: summary.outputs_with_major_or_critical,
                validated: summary.outputs_validated,
            });
        }
        // A critical finding sits on some flagged output; several may share one.
        if summary.critical_count > 0 && summary.outputs_with_major_or_critical == 0 {
            return Err(LedgerError::CriticalExceedsFlagged {
                cycle: summary.cycle_index,
                critical: summary.critical_count,
                flagged: summary.outputs_with_major_or_critical,
            });
        }
        if !(0.0..=1.0).contains(&summary.sampled_fraction) {
            return Err(LedgerError::SampledFraction {
                cycle: summary.cycle_index,
                value: summary.sampled_fraction,
            });
        }
        self.cycles.push(summary);
        Ok(())
    }

    pub fn cycles(&self) -> &[CycleSummary] {
        &self.cycles
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Trailing cycles spent at `tier`, oldest first.
    pub fn trailing_at(&self, tier: Tier) -> &[CycleSummary] {
        let start = self
            .cycles
            .iter()
            .rposition(|c| c.tier_during_cycle != tier)
            .map_or(0, |i| i + 1);
        &self.cycles[start..]
    }

    /// Trailing breach cycles at the tier of the most recent cycle.
    pub fn breach_streak(&self, policy: &TransitionPolicy) -> u32 {
        let Some(last) = self.cycles.last() else {
            return 0;
        };
        self.trailing_at(last.tier_during_cycle)
            .iter()
            .rev()
            .take_while(|c| c.is_breach(policy))
            .count() as u32
    }

    /// The last `n` cycles (or fewer).
    pub fn tail(&self, n: usize) -> &[CycleSummary] {
        &self.cycles[self.cycles.len().saturating_sub(n)..]
    }

    /// Index just past the most recent demotion-grade event: a cycle with a
    /// critical finding, or one that completes a run of consecutive breaches
    /// at a single tier. Evidence before it no longer counts toward rating.
    pub fn reset_point(&self, policy: &TransitionPolicy) -> usize {
        let limit = policy.consecutive_breach_limit.max(1) as usize;
        let mut reset = 0;
        let mut streak = 0usize;
        let mut streak_tier = None;
        for (i, c) in self.cycles.iter().enumerate() {
            if streak_tier != Some(c.tier_during_cycle) {
                streak = 0;
                streak_tier = Some(c.tier_during_cycle);
            }
            if c.is_breach(policy) {
                streak += 1;
            } else {
                streak = 0;
            }
            if c.critical_count > 0 || streak >= limit {
                reset = i + 1;
                streak = 0;
            }
        }
        reset
    }
}

/// Clean-cycle tallies since the last reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanCounts {
    pub total: u32,
    pub at_tier2_or_above: u32,
    pub at_tier3_or_above: u32,
}

pub fn clean_counts(ledger: &EvidenceLedger, policy: &TransitionPolicy) -> CleanCounts {
    let start = ledger.reset_point(policy);
    ledger.cycles()[start..]
        .iter()
        .filter(|c| c.is_clean(policy))
        .fold(CleanCounts::default(), |mut acc, c| {
            acc.total += 1;
            if c.tier_during_cycle.level() >= 2 {
                acc.at_tier2_or_above += 1;
            }
            if c.tier_during_cycle.level() >= 3 {
                acc.at_tier3_or_above += 1;
            }
            acc
        })
}

/// Capability rating justified by the ledger alone.
///
/// Counts clean cycles after the most recent critical finding or breach run,
/// so a demotion-grade event can drop the rating as far as Unproven.
pub fn derive_capability_rating(
    ledger: &EvidenceLedger,
    policy: &TransitionPolicy,
) -> CapabilityRating {
    rating_for_counts(clean_counts(ledger, policy), policy)
}

pub fn rating_for_counts(counts: CleanCounts, policy: &TransitionPolicy) -> CapabilityRating {
    let r = &policy.rating;
    if counts.total >= r.mature_clean_cycles && counts.at_tier3_or_above >= r.mature_at_tier3_or_above
    {
        CapabilityRating::Mature
    } else if counts.total >= r.established_clean_cycles
        && counts.at_tier2_or_above >= r.established_at_tier2_or_above
    {
        CapabilityRating::Established
    } else if counts.total >= r.emerging_clean_cycles {
        CapabilityRating::Emerging
    } else {
        CapabilityRating::Unproven
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn policy() -> TransitionPolicy {
        TransitionPolicy::default()
    }

    #[test]
    fn empty_ledger_is_unproven() {
        assert_eq!(
            derive_capability_rating(&EvidenceLedger::new(), &policy()),
            CapabilityRating::Unproven
        );
    }

    #[test]
    fn three_clean_tier1_cycles_is_emerging() {
        let ledger = EvidenceLedger::from_cycles(clean_run(1, 3, Tier::Tier1)).unwrap();
        assert_eq!(derive_capability_rating(&ledger, &policy()), CapabilityRating::Emerging);
        let two = EvidenceLedger::from_cycles(clean_run(1, 2, Tier::Tier1)).unwrap();
        assert_eq!(derive_capability_rating(&two, &policy()), CapabilityRating::Unproven);
    }

    #[test]
    fn established_needs_tier2_evidence() {
        let mut cycles = clean_run(1, 8, Tier::Tier1);
        let ledger = EvidenceLedger::from_cycles(cycles.clone()).unwrap();
        assert_eq!(derive_capability_rating(&ledger, &policy()), CapabilityRating::Emerging);
        cycles = clean_run(1, 3, Tier::Tier1);
        cycles.extend(clean_run(4, 5, Tier::Tier2));
        let ledger = EvidenceLedger::from_cycles(cycles).unwrap();
        assert_eq!(derive_capability_rating(&ledger, &policy()), CapabilityRating::Established);
    }

    #[test]
    fn critical_after_emerging_drops_to_unproven() {
        let mut cycles = clean_run(1, 3, Tier::Tier1);
        cycles.push(cycle(4, Tier::Tier2, 4, 3, 1));
        let ledger = EvidenceLedger::from_cycles(cycles).unwrap();
        assert_eq!(derive_capability_rating(&ledger, &policy()), CapabilityRating::Unproven);
    }

    #[test]
    fn consecutive_breach_resets_but_single_breach_does_not() {
        let mut cycles = clean_run(1, 3, Tier::Tier2);
        cycles.push(cycle(4, Tier::Tier2, 10, 5, 0));
        let ledger = EvidenceLedger::from_cycles(cycles.clone()).unwrap();
        assert_eq!(derive_capability_rating(&ledger, &policy()), CapabilityRating::Emerging);
        cycles.push(cycle(5, Tier::Tier2, 10, 5, 0));
        let ledger = EvidenceLedger::from_cycles(cycles).unwrap();
        assert_eq!(derive_capability_rating(&ledger, &policy()), CapabilityRating::Unproven);
        assert_eq!(ledger.breach_streak(&policy()), 2);
    }

    #[test]
    fn error_rate_on_boundary_is_neither_clean_nor_breach() {
        let c = cycle(1, Tier::Tier2, 10, 1, 0);
        assert_eq!(c.error_rate(), Some(0.1));
        assert!(!c.is_clean(&policy()));
        assert!(!c.is_breach(&policy()));
    }

    #[test]
    fn ledger_rejects_malformed_cycles() {
        let mut l = EvidenceLedger::new();
        l.push(cycle(2, Tier::Tier1, 1, 0, 0)).unwrap();
        assert!(matches!(
            l.push(cycle(2, Tier::Tier1, 1, 0, 0)),
            Err(LedgerError::NonIncreasingCycle { .. })
        ));
        assert!(matches!(
            l.push(cycle(3, Tier::Tier1, 1, 2, 0)),
            Err(LedgerError::FlaggedExceedsValidated { .. })
        ));
    }

    #[test]
    fn trailing_at_stops_at_other_tier() {
        let mut cycles = clean_run(1, 2, Tier::Tier1);
        cycles.extend(clean_run(3, 4, Tier::Tier2));
        let ledger = EvidenceLedger::from_cycles(cycles).unwrap();
        assert_eq!(ledger.trailing_at(Tier::Tier2).len(), 4);
        assert_eq!(ledger.trailing_at(Tier::Tier3).len(), 0);
    }
}
