//! Domain validation checklists.
//!
//! The bundled templates are starting points for Tier 2 review and Tier 3
//! sampled review. Teams edit the files `init` installs; the engine loads
//! whichever version is on disk.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::outcome::CheckResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChecklistDomain {
    Code,
    Document,
    DataAnalysis,
}

impl ChecklistDomain {
    pub const ALL: [ChecklistDomain; 3] = [
        ChecklistDomain::Code,
        ChecklistDomain::Document,
        ChecklistDomain::DataAnalysis,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ChecklistDomain::Code => "code.toml",
            ChecklistDomain::Document => "document.toml",
            ChecklistDomain::DataAnalysis => "data_analysis.toml",
        }
    }

    fn bundled_source(self) -> &'static str {
        match self {
            ChecklistDomain::Code => include_str!("../../templates/code.toml"),
            ChecklistDomain::Document => include_str!("../../templates/document.toml"),
            ChecklistDomain::DataAnalysis => include_str!("../../templates/data_analysis.toml"),
        }
    }
}

impl fmt::Display for ChecklistDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChecklistDomain::Code => "code",
            ChecklistDomain::Document => "document",
            ChecklistDomain::DataAnalysis => "data_analysis",
        })
    }
}

impl FromStr for ChecklistDomain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").to_ascii_lowercase().as_str() {
            "code" => Ok(Self::Code),
            "document" | "doc" | "docs" => Ok(Self::Document),
            "data_analysis" | "data" => Ok(Self::DataAnalysis),
            other => Err(format!("unknown checklist domain {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub id: String,
    pub name: String,
    pub what_to_verify: String,
    pub failure_modes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecklistTemplate {
    pub domain: ChecklistDomain,
    pub title: String,
    pub checks: Vec<Check>,
}

#[derive(Debug, thiserror::Error)]
pub enum ChecklistError {
    #[error("reading checklist {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing checklist: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("checklist has duplicate check id {0:?}")]
    DuplicateId(String),
    #[error("checklist has no checks")]
    Empty,
}

impl ChecklistTemplate {
    pub fn bundled(domain: ChecklistDomain) -> Self {
        Self::parse(domain.bundled_source()).expect("bundled checklist templates are valid")
    }

    pub fn bundled_source(domain: ChecklistDomain) -> &'static str {
        domain.bundled_source()
    }

    pub fn parse(src: &str) -> Result<Self, ChecklistError> {
        let t: ChecklistTemplate = toml::from_str(src)?;
        if t.checks.is_empty() {
            return Err(ChecklistError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &t.checks {
            if !seen.insert(c.id.as_str()) {
                return Err(ChecklistError::DuplicateId(c.id.clone()));
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, ChecklistError> {
        let src = std::fs::read_to_string(path).map_err(|source| ChecklistError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&src)
    }

    pub fn check_ids(&self) -> impl Iterator<Item = &str> {
        self.checks.iter().map(|c| c.id.as_str())
    }

    /// Template checks absent from a results map. Every check must be answered
    /// pass, fail or n/a.
    pub fn missing_checks(&self, results: &BTreeMap<String, CheckResult>) -> Vec<String> {
        self.check_ids()
            .filter(|id| !results.contains_key(*id))
            .map(str::to_string)
            .collect()
    }
}

/// Templates keyed by domain; defaults to the bundled set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistSet {
    pub templates: BTreeMap<ChecklistDomain, ChecklistTemplate>,
}

impl Default for ChecklistSet {
    fn default() -> Self {
        Self {
            templates: ChecklistDomain::ALL
                .into_iter()
                .map(|d| (d, ChecklistTemplate::bundled(d)))
                .collect(),
        }
    }
}

impl ChecklistSet {
    /// Shared copy of the bundled templates.
    pub fn bundled() -> &'static ChecklistSet {
        static BUNDLED: std::sync::OnceLock<ChecklistSet> = std::sync::OnceLock::new();
        BUNDLED.get_or_init(ChecklistSet::default)
    }

    pub fn get(&self, domain: ChecklistDomain) -> &ChecklistTemplate {
        &self.templates[&domain]
    }

    /// Load edited templates from `dir`, falling back to the bundled version
    /// for any domain without a file.
    pub fn load_dir(dir: &Path) -> Result<Self, ChecklistError> {
        let mut set = Self::default();
        for domain in ChecklistDomain::ALL {
            let path = dir.join(domain.file_name());
            if path.exists() {
                set.templates.insert(domain, ChecklistTemplate::load(&path)?);
            }
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_counts() {
        assert_eq!(ChecklistTemplate::bundled(ChecklistDomain::Code).checks.len(), 7);
        assert_eq!(ChecklistTemplate::bundled(ChecklistDomain::Document).checks.len(), 7);
        assert_eq!(ChecklistTemplate::bundled(ChecklistDomain::DataAnalysis).checks.len(), 6);
    }

    #[test]
    fn hallucinated_api_row() {
        let code = ChecklistTemplate::bundled(ChecklistDomain::Code);
        let c = code.checks.iter().find(|c| c.name == "Hallucinated APIs").unwrap();
        assert!(c.failure_modes.starts_with("Confidently calls non-existent functions"));
    }

    #[test]
    fn missing_checks_lists_absent_keys() {
        let t = ChecklistTemplate::bundled(ChecklistDomain::DataAnalysis);
        let mut results: BTreeMap<String, CheckResult> = t
            .check_ids()
            .map(|id| (id.to_string(), CheckResult::Pass))
            .collect();
        assert!(t.missing_checks(&results).is_empty());
        results.remove("reproducibility");
        assert_eq!(t.missing_checks(&results), vec!["reproducibility".to_string()]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let src = r#"
domain = "code"
title = "x"
[[checks]]
id = "a"
name = "A"
what_to_verify = ""
failure_modes = ""
[[checks]]
id = "a"
name = "A again"
what_to_verify = ""
failure_modes = ""
"#;
        assert!(matches!(
            ChecklistTemplate::parse(src),
            Err(ChecklistError::DuplicateId(_))
        ));
    }
}
