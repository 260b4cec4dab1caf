//! Simulation and sweep configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::governance::policy::PolicyError;
use crate::governance::{Level, Tier, TransitionPolicy};
use crate::quality::sampling::SamplingError;
use crate::quality::{ErosionPolicy, SamplingParams};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{field} = {value} is not a probability in [0, 1]")]
    Probability { field: String, value: f64 },
    #[error("{0} must be at least 1")]
    Zero(String),
    #[error("simulation needs at least one task type")]
    NoTaskTypes,
    #[error("duplicate task type {0}")]
    DuplicateTaskType(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("unknown sweep parameter {0:?}")]
    UnknownParam(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Named random source. Runs are reproducible from `(rng, seed)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RngKind {
    #[default]
    Chacha8,
}

/// S, V and C for a simulated type; capability comes from the simulated ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimAssessment {
    pub structuredness: Level,
    pub verifiability: Level,
    pub consequence: Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorOverride {
    pub cycle: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTaskType {
    pub id: String,
    pub start_tier: Tier,
    pub true_error_rate: f64,
    /// Added to the error rate after every cycle, clamped to [0, 1].
    #[serde(default)]
    pub drift: f64,
    pub outputs_per_cycle: u32,
    /// Share of errors that are critical.
    #[serde(default)]
    pub critical_share: f64,
    /// Starting Tier 3/4 sampling rate; defaults to `sampling.initial_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_sampling_rate: Option<f64>,
    /// When set, promotions stop at the tier the matrix gives for this
    /// assessment and the evidence-derived capability rating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<SimAssessment>,
    /// Error rate forced for specific cycles, ignoring drift.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub error_overrides: Vec<ErrorOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewerModel {
    pub detection_probability: f64,
    /// Multiplicative loss of detection per AI-involved cycle.
    #[serde(default)]
    pub decay_per_idle_cycle: f64,
    /// Detection restored by a human-only cycle.
    pub recovery_on_human_only_cycle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default)]
    pub rng: RngKind,
    pub cycles: u32,
    pub task_types: Vec<SimTaskType>,
    pub reviewers: ReviewerModel,
    pub integration_catch_probability: f64,
    #[serde(default)]
    pub policy: TransitionPolicy,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub erosion: ErosionPolicy,
    /// Schedule a human-only cycle whenever a type is flagged for erosion.
    #[serde(default)]
    pub erosion_schedule: bool,
    #[serde(default = "yes")]
    pub transitions_enabled: bool,
    #[serde(default = "yes")]
    pub adaptive_sampling: bool,
}

fn yes() -> bool {
    true
}

pub(crate) fn check_probability(field: &str, value: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SimError::Probability {
            field: field.to_string(),
            value,
        })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.cycles == 0 {
            return Err(SimError::Zero("cycles".into()));
        }
        if self.task_types.is_empty() {
            return Err(SimError::NoTaskTypes);
        }
        let r = &self.reviewers;
        check_probability("reviewers.detection_probability", r.detection_probability)?;
        check_probability("reviewers.decay_per_idle_cycle", r.decay_per_idle_cycle)?;
        check_probability(
            "reviewers.recovery_on_human_only_cycle",
            r.recovery_on_human_only_cycle,
        )?;
        check_probability(
            "integration_catch_probability",
            self.integration_catch_probability,
        )?;
        self.policy.validate()?;
        self.sampling.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.task_types {
            if !seen.insert(t.id.as_str()) {
                return Err(SimError::DuplicateTaskType(t.id.clone()));
            }
            let f = |name: &str| format!("task_types[{}].{name}", t.id);
            check_probability(&f("true_error_rate"), t.true_error_rate)?;
            check_probability(&f("critical_share"), t.critical_share)?;
            if !t.drift.is_finite() || t.drift.abs() > 1.0 {
                return Err(SimError::Probability {
                    field: f("drift"),
                    value: t.drift,
                });
            }
            if t.outputs_per_cycle == 0 {
                return Err(SimError::Zero(f("outputs_per_cycle")));
            }
            if let Some(s) = t.initial_sampling_rate {
                check_probability(&f("initial_sampling_rate"), s)?;
                if s == 0.0 {
                    return Err(SimError::Probability {
                        field: f("initial_sampling_rate"),
                        value: s,
                    });
                }
            }
            for o in &t.error_overrides {
                check_probability(&f("error_overrides.rate"), o.rate)?;
            }
        }
        Ok(())
    }

    pub fn from_toml(src: &str) -> Result<Self, SimError> {
        let c: SimConfig = toml::from_str(src)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let src = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&src)
    }

    /// Set one numeric parameter by dotted name. `task_types.*` applies to
    /// every task type.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), SimError> {
        match name {
            "seed" => self.seed = value as u64,
            "cycles" => self.cycles = value as u32,
            "integration_catch_probability" => self.integration_catch_probability = value,
            "reviewers.detection_probability" => self.reviewers.detection_probability = value,
            "reviewers.decay_per_idle_cycle" => self.reviewers.decay_per_idle_cycle = value,
            "reviewers.recovery_on_human_only_cycle" => {
                self.reviewers.recovery_on_human_only_cycle = value
            }
            "sampling.initial_rate" => self.sampling.initial_rate = value,
            "sampling.step" => self.sampling.step = value,
            "erosion.threshold" => self.erosion.threshold = value as u32,
            "policy.consecutive_breach_limit" => self.policy.consecutive_breach_limit = value as u32,
            "task_types.true_error_rate" => self.each(|t| t.true_error_rate = value),
            "task_types.drift" => self.each(|t| t.drift = value),
            "task_types.critical_share" => self.each(|t| t.critical_share = value),
            "task_types.initial_sampling_rate" => {
                self.each(|t| t.initial_sampling_rate = Some(value))
            }
            "task_types.outputs_per_cycle" => self.each(|t| t.outputs_per_cycle = value as u32),
            other => return Err(SimError::UnknownParam(other.to_string())),
        }
        Ok(())
    }

    fn each(&mut self, f: impl Fn(&mut SimTaskType)) {
        self.task_types.iter_mut().for_each(f);
    }
}

/// A base config and a grid of parameter values; every combination is run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub grid: BTreeMap<String, Vec<f64>>,
}

impl SweepConfig {
    pub fn from_toml(src: &str) -> Result<Self, SimError> {
        let s: SweepConfig = toml::from_str(src)?;
        s.base.validate()?;
        for name in s.grid.keys() {
            s.base.clone().set_param(name, 0.0)?;
        }
        Ok(s)
    }

    /// Every grid point in lexicographic order of parameter names.
    pub fn expand(&self) -> Result<Vec<(BTreeMap<String, f64>, SimConfig)>, SimError> {
        let mut points: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new()];
        for (name, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        points
            .into_iter()
            .map(|p| {
                let mut c = self.base.clone();
                for (k, v) in &p {
                    c.set_param(k, *v)?;
                }
                c.validate()?;
                Ok((p, c))
            })
            .collect()
    }
}
