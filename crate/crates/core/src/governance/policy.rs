//! Tier transition policy.
//!
//! Cycle minimums and the two-cycle breach rule follow the framework's
//! recommendations. Error-rate thresholds and the capability-rating mapping
//! are calibration defaults and are expected to be tuned per team.

use serde::{Deserialize, Serialize};

use super::levels::Tier;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("{field} must be at least 1")]
    ZeroCount { field: &'static str },
    #[error("{field} = {value} is outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("rating policy is inconsistent: {0}")]
    Rating(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromotionMinimums {
    pub pilot_to_tier1: u32,
    pub tier1_to_tier2: u32,
    pub tier2_to_tier3: u32,
    pub tier3_to_tier4: u32,
}

impl Default for PromotionMinimums {
    fn default() -> Self {
        Self {
            pilot_to_tier1: 3,
            tier1_to_tier2: 3,
            tier2_to_tier3: 5,
            tier3_to_tier4: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TierThresholds {
    pub tier1: f64,
    pub tier2: f64,
    pub tier3: f64,
    pub tier4: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        Self {
            tier1: 0.20,
            tier2: 0.10,
            tier3: 0.05,
            tier4: 0.02,
        }
    }
}

/// Clean-cycle counts behind each capability rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatingPolicy {
    pub emerging_clean_cycles: u32,
    pub established_clean_cycles: u32,
    pub established_at_tier2_or_above: u32,
    pub mature_clean_cycles: u32,
    pub mature_at_tier3_or_above: u32,
}

impl Default for RatingPolicy {
    fn default() -> Self {
        Self {
            emerging_clean_cycles: 3,
            established_clean_cycles: 8,
            established_at_tier2_or_above: 5,
            mature_clean_cycles: 16,
            mature_at_tier3_or_above: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionPolicy {
    pub promotion_min_cycles: PromotionMinimums,
    pub error_rate_thresholds: TierThresholds,
    pub consecutive_breach_limit: u32,
    /// Levels dropped on a critical finding.
    pub critical_error_demotion_depth: u8,
    pub rating: RatingPolicy,
}

impl Default for TransitionPolicy {
    fn default() -> Self {
        Self {
            promotion_min_cycles: PromotionMinimums::default(),
            error_rate_thresholds: TierThresholds::default(),
            consecutive_breach_limit: 2,
            critical_error_demotion_depth: 1,
            rating: RatingPolicy::default(),
        }
    }
}

impl TransitionPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let m = &self.promotion_min_cycles;
        for (field, v) in [
            ("promotion_min_cycles.pilot_to_tier1", m.pilot_to_tier1),
            ("promotion_min_cycles.tier1_to_tier2", m.tier1_to_tier2),
            ("promotion_min_cycles.tier2_to_tier3", m.tier2_to_tier3),
            ("promotion_min_cycles.tier3_to_tier4", m.tier3_to_tier4),
            ("consecutive_breach_limit", self.consecutive_breach_limit),
            (
                "critical_error_demotion_depth",
                self.critical_error_demotion_depth as u32,
            ),
        ] {
            if v == 0 {
                return Err(PolicyError::ZeroCount { field });
            }
        }
        let t = &self.error_rate_thresholds;
        for (field, v) in [
            ("error_rate_thresholds.tier1", t.tier1),
            ("error_rate_thresholds.tier2", t.tier2),
            ("error_rate_thresholds.tier3", t.tier3),
            ("error_rate_thresholds.tier4", t.tier4),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PolicyError::OutOfRange { field, value: v });
            }
        }
        let r = &self.rating;
        if r.emerging_clean_cycles == 0 {
            return Err(PolicyError::ZeroCount {
                field: "rating.emerging_clean_cycles",
            });
        }
        if r.established_clean_cycles < r.emerging_clean_cycles
            || r.mature_clean_cycles < r.established_clean_cycles
            || r.established_at_tier2_or_above > r.established_clean_cycles
            || r.mature_at_tier3_or_above > r.mature_clean_cycles
        {
            return Err(PolicyError::Rating(
                "cycle counts must be non-decreasing from Emerging to Mature".into(),
            ));
        }
        Ok(())
    }

    /// Cycles required at `from` before a single-step promotion. `None` when
    /// no evidence-based promotion leaves `from`.
    pub fn min_cycles_from(&self, from: Tier) -> Option<u32> {
        let m = &self.promotion_min_cycles;
        match from {
            Tier::Tier1Pilot => Some(m.pilot_to_tier1),
            Tier::Tier1 => Some(m.tier1_to_tier2),
            Tier::Tier2 => Some(m.tier2_to_tier3),
            Tier::Tier3 => Some(m.tier3_to_tier4),
            Tier::AiRestricted | Tier::Tier4 => None,
        }
    }

    /// Error-rate threshold for a tier; the pilot shares Tier 1's.
    pub fn threshold(&self, tier: Tier) -> Option<f64> {
        let t = &self.error_rate_thresholds;
        match tier {
            Tier::AiRestricted => None,
            Tier::Tier1Pilot | Tier::Tier1 => Some(t.tier1),
            Tier::Tier2 => Some(t.tier2),
            Tier::Tier3 => Some(t.tier3),
            Tier::Tier4 => Some(t.tier4),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_recommended_minimums() {
        let p = TransitionPolicy::default();
        assert_eq!(p.min_cycles_from(Tier::Tier1), Some(3));
        assert_eq!(p.min_cycles_from(Tier::Tier2), Some(5));
        assert_eq!(p.min_cycles_from(Tier::Tier3), Some(8));
        assert_eq!(p.min_cycles_from(Tier::Tier4), None);
        assert_eq!(p.consecutive_breach_limit, 2);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = TransitionPolicy::default();
        p.error_rate_thresholds.tier2 = 1.5;
        assert!(matches!(p.validate(), Err(PolicyError::OutOfRange { .. })));
        let mut p = TransitionPolicy::default();
        p.promotion_min_cycles.tier1_to_tier2 = 0;
        assert!(matches!(p.validate(), Err(PolicyError::ZeroCount { .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<TransitionPolicy>("consecutive_breach_limt = 3").unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }
}
