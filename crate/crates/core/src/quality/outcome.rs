use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::governance::Tier;
use crate::ids::{ItemId, PersonId};

/// Finding severity. Only `Critical` triggers immediate demotion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Minor,
    Major,
    Critical,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Minor => "minor",
            Severity::Major => "major",
            Severity::Critical => "critical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckResult {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finding {
    pub severity: Severity,
    pub category: String,
    #[serde(default)]
    pub note: String,
}

/// Where an error surfaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectedIn {
    Review,
    Sampling,
    Integration,
    PostDelivery,
}

impl DetectedIn {
    /// Caught by the tier's own validation protocol.
    pub fn is_validation(self) -> bool {
        matches!(self, DetectedIn::Review | DetectedIn::Sampling)
    }

    /// Slipped past the protocol.
    pub fn is_escape(self) -> bool {
        !self.is_validation()
    }
}

/// One review event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationOutcome {
    pub item_id: ItemId,
    pub reviewer: PersonId,
    #[serde(default)]
    pub checklist_results: BTreeMap<String, CheckResult>,
    #[serde(default)]
    pub findings: Vec<Finding>,
    pub review_minutes: u32,
    pub first_pass_accept: bool,
    pub detected_in: DetectedIn,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OutcomeError {
    #[error("outcome for {0} has no named reviewer")]
    AnonymousReviewer(ItemId),
    #[error("outcome for {0} is marked first-pass accepted but carries a major or critical finding")]
    FirstPassWithFindings(ItemId),
    #[error("detected_in = {detected_in:?} is only valid for Tier 3 and Tier 4 items ({item} is {tier})")]
    DetectionChannel {
        item: ItemId,
        detected_in: DetectedIn,
        tier: Tier,
    },
    #[error("outcome for {0} is not for an AI-involved item")]
    RestrictedItem(ItemId),
}

impl ValidationOutcome {
    pub fn has_major_or_critical(&self) -> bool {
        self.findings.iter().any(|f| f.severity >= Severity::Major)
    }

    pub fn critical_count(&self) -> u32 {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Critical)
            .count() as u32
    }

    /// Checks that need no registry context.
    pub fn validate(&self) -> Result<(), OutcomeError> {
        if self.reviewer.is_blank() {
            return Err(OutcomeError::AnonymousReviewer(self.item_id.clone()));
        }
        if self.first_pass_accept && self.has_major_or_critical() {
            return Err(OutcomeError::FirstPassWithFindings(self.item_id.clone()));
        }
        Ok(())
    }

    /// Checks against the tier of the item under review.
    pub fn validate_for_tier(&self, tier: Tier) -> Result<(), OutcomeError> {
        self.validate()?;
        if matches!(self.detected_in, DetectedIn::Sampling | DetectedIn::Integration)
            && !tier.is_sampled()
        {
            return Err(OutcomeError::DetectionChannel {
                item: self.item_id.clone(),
                detected_in: self.detected_in,
                tier,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(detected_in: DetectedIn, first_pass: bool, findings: Vec<Finding>) -> ValidationOutcome {
        ValidationOutcome {
            item_id: "api-1".into(),
            reviewer: "dev-a".into(),
            checklist_results: BTreeMap::new(),
            findings,
            review_minutes: 30,
            first_pass_accept: first_pass,
            detected_in,
        }
    }

    #[test]
    fn sampling_rejected_below_tier3() {
        let o = outcome(DetectedIn::Sampling, true, vec![]);
        assert!(matches!(
            o.validate_for_tier(Tier::Tier2),
            Err(OutcomeError::DetectionChannel { .. })
        ));
        o.validate_for_tier(Tier::Tier3).unwrap();
    }

    #[test]
    fn first_pass_implies_no_major() {
        let o = outcome(
            DetectedIn::Review,
            true,
            vec![Finding {
                severity: Severity::Major,
                category: "business_logic".into(),
                note: String::new(),
            }],
        );
        assert!(matches!(o.validate(), Err(OutcomeError::FirstPassWithFindings(_))));
        let minor = outcome(
            DetectedIn::Review,
            true,
            vec![Finding {
                severity: Severity::Minor,
                category: "style".into(),
                note: String::new(),
            }],
        );
        minor.validate().unwrap();
    }

    #[test]
    fn check_result_serializes_na() {
        let s = serde_json::to_string(&CheckResult::NotApplicable).unwrap();
        assert_eq!(s, "\"n/a\"");
    }
}
