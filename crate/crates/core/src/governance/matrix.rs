//! Delegation decision matrix.
//!
//! Five explicit rows fix `(structuredness, verifiability, capability)` and
//! give a tier per consequence level. Two pattern rules sit above them:
//! an unproven capability caps the result at a Tier 1 pilot, and low
//! structuredness or low verifiability caps it at Tier 1. Combinations not
//! covered by any row resolve to the highest tier among the explicit rows the
//! input dominates component-wise, evaluated at the same consequence level.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::levels::{Assessment, CapabilityRating, Level, Tier};

/// One explicit matrix row: a fixed (S, V, D) triple with a tier per C.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixRow {
    pub rule: RuleId,
    pub structuredness: Level,
    pub verifiability: Level,
    pub capability: CapabilityRating,
    /// Indexed by consequence: Low, Med, High.
    pub tiers: [Tier; 3],
}

impl MatrixRow {
    pub fn tier_at(&self, consequence: Level) -> Tier {
        self.tiers[consequence.index()]
    }

    fn dominated_by(&self, a: &Assessment) -> bool {
        self.structuredness <= a.structuredness
            && self.verifiability <= a.verifiability
            && self.capability <= a.capability
    }
}

/// Identifies which rule produced a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    HighHighMature,
    HighHighEstablished,
    HighMedEstablished,
    MedMedEstablished,
    MedMedEmerging,
    LowStructureOrVerifiability,
    UnprovenCapability,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleId::HighHighMature => "S: High, V: High, D: Mature",
            RuleId::HighHighEstablished => "S: High, V: High, D: Established",
            RuleId::HighMedEstablished => "S: High, V: Med, D: Established",
            RuleId::MedMedEstablished => "S: Med, V: Med, D: Established",
            RuleId::MedMedEmerging => "S: Med, V: Med, D: Emerging",
            RuleId::LowStructureOrVerifiability => "S: Low or V: Low",
            RuleId::UnprovenCapability => "D: Unproven",
        })
    }
}

use CapabilityRating as D;
use Level::{High, Low, Med};
use Tier::{AiRestricted as R, Tier1 as T1, Tier1Pilot as P, Tier2 as T2, Tier3 as T3, Tier4 as T4};

pub const EXPLICIT_ROWS: [MatrixRow; 5] = [
    MatrixRow {
        rule: RuleId::HighHighMature,
        structuredness: High,
        verifiability: High,
        capability: D::Mature,
        tiers: [T4, T3, T2],
    },
    MatrixRow {
        rule: RuleId::HighHighEstablished,
        structuredness: High,
        verifiability: High,
        capability: D::Established,
        tiers: [T3, T2, T2],
    },
    MatrixRow {
        rule: RuleId::HighMedEstablished,
        structuredness: High,
        verifiability: Med,
        capability: D::Established,
        tiers: [T3, T2, T1],
    },
    MatrixRow {
        rule: RuleId::MedMedEstablished,
        structuredness: Med,
        verifiability: Med,
        capability: D::Established,
        tiers: [T2, T2, T1],
    },
    MatrixRow {
        rule: RuleId::MedMedEmerging,
        structuredness: Med,
        verifiability: Med,
        capability: D::Emerging,
        tiers: [T2, T1, R],
    },
];

pub const LOW_STRUCTURE_TIERS: [Tier; 3] = [T1, T1, R];
pub const UNPROVEN_TIERS: [Tier; 3] = [P, P, R];

/// How the result was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "match", rename_all = "snake_case")]
pub enum MatchedRule {
    /// The input hit a row or pattern rule directly.
    Exact { rule: RuleId },
    /// No row lists the input; the tier comes from the strongest dominated row.
    Dominance { via: RuleId },
}

impl MatchedRule {
    pub fn rule(&self) -> RuleId {
        match *self {
            MatchedRule::Exact { rule } | MatchedRule::Dominance { via: rule } => rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub tier: Tier,
    pub matched_rule: MatchedRule,
    pub rationale: String,
}

/// Default autonomy tier for an assessment. Total and deterministic.
pub fn classify(a: &Assessment) -> Classification {
    let c = a.consequence.index();

    if a.capability == CapabilityRating::Unproven {
        let tier = UNPROVEN_TIERS[c];
        return Classification {
            tier,
            matched_rule: MatchedRule::Exact {
                rule: RuleId::UnprovenCapability,
            },
            rationale: format!(
                "{a}: capability has no evidence on this task type, so {tier} at C: {}",
                a.consequence
            ),
        };
    }

    if a.structuredness == Low || a.verifiability == Low {
        let tier = LOW_STRUCTURE_TIERS[c];
        return Classification {
            tier,
            matched_rule: MatchedRule::Exact {
                rule: RuleId::LowStructureOrVerifiability,
            },
            rationale: format!(
                "{a}: low structuredness or verifiability limits delegation to {tier} at C: {}",
                a.consequence
            ),
        };
    }

    if let Some(row) = EXPLICIT_ROWS.iter().find(|r| {
        r.structuredness == a.structuredness
            && r.verifiability == a.verifiability
            && r.capability == a.capability
    }) {
        let tier = row.tiers[c];
        return Classification {
            tier,
            matched_rule: MatchedRule::Exact { rule: row.rule },
            rationale: format!("{a}: matrix row [{}] gives {tier}", row.rule),
        };
    }

    // Every remaining input has S, V >= Med and D >= Emerging, so it dominates
    // at least the Med/Med/Emerging row.
    let best = EXPLICIT_ROWS
        .iter()
        .filter(|r| r.dominated_by(a))
        .fold(None::<&MatrixRow>, |best, r| match best {
            Some(b) if b.tiers[c] >= r.tiers[c] => Some(b),
            _ => Some(r),
        })
        .expect("inputs past the pattern rules dominate the Med/Med/Emerging row");
    let tier = best.tiers[c];
    Classification {
        tier,
        matched_rule: MatchedRule::Dominance { via: best.rule },
        rationale: format!(
            "{a}: not listed; strongest dominated row [{}] gives {tier}",
            best.rule
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub assessment: Assessment,
    pub classification: Classification,
}

/// All 108 lattice points with their classification, in lattice order.
pub fn enumerate_matrix() -> Vec<MatrixEntry> {
    Assessment::lattice()
        .map(|assessment| MatrixEntry {
            classification: classify(&assessment),
            assessment,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tier(s: Level, v: Level, c: Level, d: CapabilityRating) -> Tier {
        classify(&Assessment::new(s, v, c, d)).tier
    }

    #[test]
    fn listed_examples() {
        assert_eq!(tier(High, High, Low, D::Mature), Tier::Tier4);
        assert_eq!(tier(Low, High, High, D::Mature), Tier::AiRestricted);
        assert_eq!(tier(High, High, High, D::Unproven), Tier::AiRestricted);
        assert_eq!(tier(High, High, Med, D::Unproven), Tier::Tier1Pilot);
    }

    #[test]
    fn dominance_fills_gaps() {
        // (High, High, Emerging) dominates only the Med/Med/Emerging row.
        let r = classify(&Assessment::new(High, High, Low, D::Emerging));
        assert_eq!(r.tier, Tier::Tier2);
        assert_eq!(
            r.matched_rule,
            MatchedRule::Dominance {
                via: RuleId::MedMedEmerging
            }
        );
    }

    #[test]
    fn exact_rows_report_their_rule() {
        let r = classify(&Assessment::new(High, High, Med, D::Established));
        assert_eq!(r.tier, Tier::Tier2);
        assert_eq!(
            r.matched_rule,
            MatchedRule::Exact {
                rule: RuleId::HighHighEstablished
            }
        );
        assert!(r.rationale.contains("Tier 2"));
    }

    #[test]
    fn enumerate_covers_lattice() {
        assert_eq!(enumerate_matrix().len(), 108);
    }
}
