//! Engine configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::governance::TransitionPolicy;
use crate::ids::PersonId;
use crate::planning::{EffortModelParams, GovernanceFunction};
use crate::quality::{ErosionPolicy, LintParams, SamplingParams};

pub const CONFIG_SCHEMA: &str = "tiergate.config";
pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CONFIG_FILE: &str = "tiergate.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("unsupported config schema {schema} v{version}")]
    Schema { schema: String, version: u32 },
    #[error("config value: {0}")]
    Invalid(String),
}

/// Full practice set, or only ownership tagging, checklist recording and the
/// retrospective prompt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdoptionMode {
    #[default]
    Full,
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: String,
    /// Longest a `/v1/events` long-poll waits before returning empty.
    pub long_poll_timeout_ms: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:7878".into(),
            long_poll_timeout_ms: 25_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default = "schema")]
    pub schema: String,
    #[serde(default = "version")]
    pub schema_version: u32,
    #[serde(default)]
    pub mode: AdoptionMode,
    /// Event log, relative to the config file's directory.
    #[serde(default = "registry_path")]
    pub registry: PathBuf,
    /// Checklist templates directory; bundled templates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checklists: Option<PathBuf>,
    #[serde(default)]
    pub skip_corrupt_events: bool,
    #[serde(default = "team_size")]
    pub team_size: u32,
    /// Team members allowed to act. Empty means any named person.
    #[serde(default)]
    pub roster: Vec<PersonId>,
    /// People holding the Hybrid Work Owner function, who approve
    /// promotions. Empty means any roster member.
    #[serde(default)]
    pub hwo: Vec<PersonId>,
    #[serde(default)]
    pub policy: TransitionPolicy,
    #[serde(default)]
    pub effort: EffortModelParams,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub erosion: ErosionPolicy,
    #[serde(default)]
    pub lint: LintParams,
    #[serde(default)]
    pub scaling_overrides: BTreeMap<GovernanceFunction, String>,
    #[serde(default)]
    pub service: ServiceConfig,
    /// Directory the config was loaded from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn schema() -> String {
    CONFIG_SCHEMA.into()
}
fn version() -> u32 {
    CONFIG_SCHEMA_VERSION
}
fn registry_path() -> PathBuf {
    "registry.jsonl".into()
}
fn team_size() -> u32 {
    5
}

impl Default for EngineConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config takes every default")
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA || self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::Schema {
                schema: self.schema.clone(),
                version: self.schema_version,
            });
        }
        let bad = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.policy.validate().map_err(|e| bad(&e))?;
        self.effort.validate().map_err(|e| bad(&e))?;
        self.sampling.validate().map_err(|e| bad(&e))?;
        if self.team_size == 0 {
            return Err(ConfigError::Invalid("team_size must be at least 1".into()));
        }
        if self.erosion.threshold == 0 {
            return Err(ConfigError::Invalid("erosion.threshold must be at least 1".into()));
        }
        if let Some(p) = self.roster.iter().chain(&self.hwo).find(|p| p.is_blank()) {
            return Err(ConfigError::Invalid(format!("blank name {:?} in roster", p.as_str())));
        }
        if !self.roster.is_empty() {
            if let Some(h) = self.hwo.iter().find(|h| !self.roster.contains(h)) {
                return Err(ConfigError::Invalid(format!("hwo {h} is not on the roster")));
            }
        }
        Ok(())
    }

    pub fn from_toml(src: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut c: EngineConfig = toml::from_str(src).map_err(|source| ConfigError::Parse {
            path: base_dir.display().to_string(),
            source,
        })?;
        c.base_dir = base_dir.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&src, &dir).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn registry_path(&self) -> PathBuf {
        self.base_dir.join(&self.registry)
    }

    pub fn checklists_path(&self) -> Option<PathBuf> {
        self.checklists.as_ref().map(|c| self.base_dir.join(c))
    }

    /// Whether `person` may act on this team.
    pub fn is_member(&self, person: &PersonId) -> bool {
        !person.is_blank() && (self.roster.is_empty() || self.roster.contains(person))
    }

    /// Whether `person` may approve promotions.
    pub fn may_approve(&self, person: &PersonId) -> bool {
        self.is_member(person) && (self.hwo.is_empty() || self.hwo.contains(person))
    }
}
