//! How governance functions consolidate into existing roles by team size.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamSizeBand {
    SoloPair,
    SmallTeam,
    DeptPmo,
}

impl TeamSizeBand {
    pub fn for_size(team_size: u32) -> Self {
        match team_size {
            0..=2 => TeamSizeBand::SoloPair,
            3..=7 => TeamSizeBand::SmallTeam,
            _ => TeamSizeBand::DeptPmo,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TeamSizeBand::SoloPair => "Solo/Pair (1-2)",
            TeamSizeBand::SmallTeam => "Small Team (3-7)",
            TeamSizeBand::DeptPmo => "Dept./PMO (8+)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GovernanceFunction {
    Hwo,
    Validation,
    Integration,
    Registry,
    SkillMaintenance,
}

impl GovernanceFunction {
    pub const ALL: [GovernanceFunction; 5] = [
        GovernanceFunction::Hwo,
        GovernanceFunction::Validation,
        GovernanceFunction::Integration,
        GovernanceFunction::Registry,
        GovernanceFunction::SkillMaintenance,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GovernanceFunction::Hwo => "HWO function",
            GovernanceFunction::Validation => "Validation",
            GovernanceFunction::Integration => "Integration",
            GovernanceFunction::Registry => "Registry",
            GovernanceFunction::SkillMaintenance => "Skill maint.",
        }
    }

    fn assignment(self, band: TeamSizeBand) -> &'static str {
        use GovernanceFunction::*;
        use TeamSizeBand::*;
        match (self, band) {
            (Hwo, SoloPair) => "Practitioner",
            (Hwo, SmallTeam) => "SM or Tech Lead",
            (Hwo, DeptPmo) => "Dedicated role",
            (Validation, SoloPair) => "Self-review + checklist",
            (Validation, SmallTeam) => "Peer review rotation",
            (Validation, DeptPmo) => "Validation Lead",
            (Integration, SoloPair) => "Personal DoD",
            (Integration, SmallTeam) => "Team DoD",
            (Integration, DeptPmo) => "Integration Steward",
            (Registry, SoloPair) => "Personal log",
            (Registry, SmallTeam) => "Board metadata/tags",
            (Registry, DeptPmo) => "Formal registry",
            (SkillMaintenance, SoloPair) => "Self-scheduled blocks",
            (SkillMaintenance, SmallTeam) => "Team rotation cycles",
            (SkillMaintenance, DeptPmo) => "Programmatic plan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingProfile {
    pub team_size_band: TeamSizeBand,
    pub assignments: BTreeMap<GovernanceFunction, String>,
}

/// Role assignments for a team of `team_size` people (sizes below 1 are
/// treated as 1).
pub fn scaling_profile(team_size: u32) -> ScalingProfile {
    let band = TeamSizeBand::for_size(team_size.max(1));
    ScalingProfile {
        team_size_band: band,
        assignments: GovernanceFunction::ALL
            .into_iter()
            .map(|f| (f, f.assignment(band).to_string()))
            .collect(),
    }
}

impl ScalingProfile {
    /// Apply team-specific overrides on top of the default assignments.
    pub fn with_overrides(mut self, overrides: &BTreeMap<GovernanceFunction, String>) -> Self {
        for (f, v) in overrides {
            self.assignments.insert(*f, v.clone());
        }
        self
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {}", "Function", self.team_size_band.label());
        for f in GovernanceFunction::ALL {
            let _ = writeln!(out, "{:<14} {}", f.label(), self.assignments[&f]);
        }
        out
    }
}
