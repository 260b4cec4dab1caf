//! Ordinal inputs to the delegation decision and the autonomy tier lattice.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse {what} from {input:?}")]
pub struct ParseLevelError {
    pub what: &'static str,
    pub input: String,
}

/// Three-point ordinal scale used for structuredness, verifiability and
/// consequence of error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    #[serde(alias = "medium")]
    Med,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Med, Level::High];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Low => "Low",
            Level::Med => "Medium",
            Level::High => "High",
        })
    }
}

impl FromStr for Level {
    type Err = ParseLevelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" | "l" => Ok(Level::Low),
            "med" | "medium" | "m" => Ok(Level::Med),
            "high" | "h" => Ok(Level::High),
            _ => Err(ParseLevelError {
                what: "level",
                input: s.to_string(),
            }),
        }
    }
}

/// Observed AI capability on a specific task type.
///
/// Ratings rise only through accumulated evidence; see
/// [`derive_capability_rating`](super::evidence::derive_capability_rating).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityRating {
    Unproven,
    Emerging,
    Established,
    Mature,
}

impl CapabilityRating {
    pub const ALL: [CapabilityRating; 4] = [
        CapabilityRating::Unproven,
        CapabilityRating::Emerging,
        CapabilityRating::Established,
        CapabilityRating::Mature,
    ];
}

impl fmt::Display for CapabilityRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapabilityRating::Unproven => "Unproven",
            CapabilityRating::Emerging => "Emerging",
            CapabilityRating::Established => "Established",
            CapabilityRating::Mature => "Mature",
        })
    }
}

impl FromStr for CapabilityRating {
    type Err = ParseLevelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unproven" => Ok(CapabilityRating::Unproven),
            "emerging" => Ok(CapabilityRating::Emerging),
            "established" => Ok(CapabilityRating::Established),
            "mature" => Ok(CapabilityRating::Mature),
            _ => Err(ParseLevelError {
                what: "capability rating",
                input: s.to_string(),
            }),
        }
    }
}

/// Autonomy tier, including the AI-restricted classification and the Tier 1
/// pilot variant.
///
/// The derived ordering is the lattice order
/// `AiRestricted < Tier1Pilot < Tier1 < Tier2 < Tier3 < Tier4`. The pilot
/// flag only exists on Tier 1, so an invalid pilot/tier combination cannot be
/// constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    AiRestricted,
    Tier1Pilot,
    Tier1,
    Tier2,
    Tier3,
    Tier4,
}

impl Tier {
    pub const ALL: [Tier; 6] = [
        Tier::AiRestricted,
        Tier::Tier1Pilot,
        Tier::Tier1,
        Tier::Tier2,
        Tier::Tier3,
        Tier::Tier4,
    ];

    /// Numeric tier ignoring the pilot flag: 0 for AI-restricted, 1..=4 otherwise.
    pub fn level(self) -> u8 {
        match self {
            Tier::AiRestricted => 0,
            Tier::Tier1Pilot | Tier::Tier1 => 1,
            Tier::Tier2 => 2,
            Tier::Tier3 => 3,
            Tier::Tier4 => 4,
        }
    }

    pub fn is_pilot(self) -> bool {
        matches!(self, Tier::Tier1Pilot)
    }

    /// Next position in the lattice, used for single-step promotion.
    pub fn next(self) -> Option<Tier> {
        match self {
            Tier::AiRestricted => Some(Tier::Tier1Pilot),
            Tier::Tier1Pilot => Some(Tier::Tier1),
            Tier::Tier1 => Some(Tier::Tier2),
            Tier::Tier2 => Some(Tier::Tier3),
            Tier::Tier3 => Some(Tier::Tier4),
            Tier::Tier4 => None,
        }
    }

    /// Drop `depth` numeric levels. Landing on level 1 yields plain Tier 1;
    /// anything below bottoms out at AI-restricted.
    pub fn demoted(self, depth: u8) -> Tier {
        let target = self.level().saturating_sub(depth.max(1));
        Tier::from_level(target)
    }

    pub fn from_level(level: u8) -> Tier {
        match level {
            0 => Tier::AiRestricted,
            1 => Tier::Tier1,
            2 => Tier::Tier2,
            3 => Tier::Tier3,
            _ => Tier::Tier4,
        }
    }

    /// Tiers at or above 2 produce AI output that needs a named owner,
    /// provenance and a tier-specific validation protocol.
    pub fn requires_owner(self) -> bool {
        self.level() >= 2
    }

    /// Whether post-hoc sampling is part of the tier's protocol.
    pub fn is_sampled(self) -> bool {
        self.level() >= 3
    }

    pub fn slug(self) -> &'static str {
        match self {
            Tier::AiRestricted => "ai_restricted",
            Tier::Tier1Pilot => "tier1_pilot",
            Tier::Tier1 => "tier1",
            Tier::Tier2 => "tier2",
            Tier::Tier3 => "tier3",
            Tier::Tier4 => "tier4",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::AiRestricted => "AI-restricted",
            Tier::Tier1Pilot | Tier::Tier1 => "Assisted",
            Tier::Tier2 => "Supervised",
            Tier::Tier3 => "Autonomous-Monitored",
            Tier::Tier4 => "Autonomous-Bounded",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::AiRestricted => f.write_str("AI-restricted"),
            Tier::Tier1Pilot => f.write_str("Tier 1 (pilot)"),
            other => write!(f, "Tier {}", other.level()),
        }
    }
}

impl FromStr for Tier {
    type Err = ParseLevelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_' | '(' | ')'))
            .collect();
        match norm.as_str() {
            "airestricted" | "restricted" | "0" => Ok(Tier::AiRestricted),
            "tier1pilot" | "t1pilot" | "1pilot" | "pilot" => Ok(Tier::Tier1Pilot),
            "tier1" | "t1" | "1" => Ok(Tier::Tier1),
            "tier2" | "t2" | "2" => Ok(Tier::Tier2),
            "tier3" | "t3" | "3" => Ok(Tier::Tier3),
            "tier4" | "t4" | "4" => Ok(Tier::Tier4),
            _ => Err(ParseLevelError {
                what: "tier",
                input: s.to_string(),
            }),
        }
    }
}

/// The four delegation inputs for a task type. All four are required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assessment {
    pub structuredness: Level,
    pub verifiability: Level,
    pub consequence: Level,
    pub capability: CapabilityRating,
}

impl Assessment {
    pub fn new(
        structuredness: Level,
        verifiability: Level,
        consequence: Level,
        capability: CapabilityRating,
    ) -> Self {
        Self {
            structuredness,
            verifiability,
            consequence,
            capability,
        }
    }

    /// Every point of the 3 x 3 x 3 x 4 input lattice.
    pub fn lattice() -> impl Iterator<Item = Assessment> {
        Level::ALL.into_iter().flat_map(|s| {
            Level::ALL.into_iter().flat_map(move |v| {
                Level::ALL.into_iter().flat_map(move |c| {
                    CapabilityRating::ALL
                        .into_iter()
                        .map(move |d| Assessment::new(s, v, c, d))
                })
            })
        })
    }
}

impl fmt::Display for Assessment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "S: {}, V: {}, C: {}, D: {}",
            self.structuredness, self.verifiability, self.consequence, self.capability
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tier_lattice_order() {
        let mut sorted = Tier::ALL;
        sorted.sort();
        assert_eq!(sorted, Tier::ALL);
        assert!(Tier::Tier1Pilot < Tier::Tier1);
        assert!(Tier::AiRestricted < Tier::Tier1Pilot);
    }

    #[test]
    fn demotion_lands_on_plain_tier1() {
        assert_eq!(Tier::Tier2.demoted(1), Tier::Tier1);
        assert_eq!(Tier::Tier4.demoted(2), Tier::Tier2);
        assert_eq!(Tier::Tier3.demoted(9), Tier::AiRestricted);
        assert_eq!(Tier::Tier1Pilot.demoted(1), Tier::AiRestricted);
        assert_eq!(Tier::Tier1.demoted(1), Tier::AiRestricted);
    }

    #[test]
    fn parse_tiers() {
        assert_eq!("Tier 2".parse::<Tier>().unwrap(), Tier::Tier2);
        assert_eq!("tier1-pilot".parse::<Tier>().unwrap(), Tier::Tier1Pilot);
        assert_eq!("AI-restricted".parse::<Tier>().unwrap(), Tier::AiRestricted);
        assert!("tier5".parse::<Tier>().is_err());
    }

    #[test]
    fn lattice_has_108_points() {
        assert_eq!(Assessment::lattice().count(), 108);
    }

    #[test]
    fn level_parse_accepts_medium() {
        assert_eq!("Medium".parse::<Level>().unwrap(), Level::Med);
        let a: Assessment = serde_json::from_str(
            r#"{"structuredness":"high","verifiability":"medium","consequence":"low","capability":"mature"}"#,
        )
        .unwrap();
        assert_eq!(a.verifiability, Level::Med);
    }
}
