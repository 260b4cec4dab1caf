//! Tier 3 sampling-rate management.
//!
//! Rates start at 20% without history. An escape raises the rate by one step;
//! a run of clean cycles since the last change lowers it by one step. Every
//! change lands in the plan's history so the rate stays explicit and
//! reviewable each cycle.

use serde::{Deserialize, Serialize};

use crate::governance::{CycleSummary, TransitionPolicy};
use crate::ids::TaskTypeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingParams {
    pub initial_rate: f64,
    pub step: f64,
    pub min_rate: f64,
    pub clean_cycles_to_lower: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            initial_rate: 0.20,
            step: 0.10,
            min_rate: 0.10,
            clean_cycles_to_lower: 3,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SamplingError {
    #[error("sampling {field} = {value} is out of range")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("sampling rate {rate} is below the configured minimum {min}")]
    BelowMinimum { rate: f64, min: f64 },
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.min_rate) {
            return Err(SamplingError::OutOfRange {
                field: "min_rate",
                value: self.min_rate,
            });
        }
        if !in_unit(self.initial_rate) || self.initial_rate < self.min_rate {
            return Err(SamplingError::OutOfRange {
                field: "initial_rate",
                value: self.initial_rate,
            });
        }
        if !in_unit(self.step) {
            return Err(SamplingError::OutOfRange {
                field: "step",
                value: self.step,
            });
        }
        if self.clean_cycles_to_lower == 0 {
            return Err(SamplingError::OutOfRange {
                field: "clean_cycles_to_lower",
                value: 0.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingBasis {
    DefaultStart,
    Adjustment,
    SqcMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingChange {
    pub cycle: u32,
    pub from: f64,
    pub to: f64,
    pub basis: SamplingBasis,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub task_type_id: TaskTypeId,
    pub rate: f64,
    pub basis: SamplingBasis,
    pub history: Vec<SamplingChange>,
}

/// Rates are kept at micro-precision so repeated steps stay exact (0.15 + 0.10 == 0.25).
pub(crate) fn round_rate(r: f64) -> f64 {
    (r * 1e6).round() / 1e6
}

impl SamplingPlan {
    pub fn initial(task_type_id: TaskTypeId, params: &SamplingParams) -> Self {
        Self {
            task_type_id,
            rate: params.initial_rate,
            basis: SamplingBasis::DefaultStart,
            history: Vec::new(),
        }
    }

    /// Cycle of the most recent change, if any.
    pub fn last_change_cycle(&self) -> Option<u32> {
        self.history.last().map(|c| c.cycle)
    }

    fn changed(&self, to: f64, basis: SamplingBasis, cycle: u32, reason: String) -> Self {
        let mut next = self.clone();
        next.history.push(SamplingChange {
            cycle,
            from: self.rate,
            to,
            basis,
            reason,
        });
        next.rate = to;
        next.basis = basis;
        next
    }

    /// Store a team-supplied SQC-derived rate. The engine does not compute
    /// SQC plans.
    pub fn with_sqc_rate(
        &self,
        rate: f64,
        cycle: u32,
        params: &SamplingParams,
        reason: impl Into<String>,
    ) -> Result<Self, SamplingError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(SamplingError::OutOfRange { field: "rate", value: rate });
        }
        if rate < params.min_rate {
            return Err(SamplingError::BelowMinimum {
                rate,
                min: params.min_rate,
            });
        }
        Ok(self.changed(round_rate(rate), SamplingBasis::SqcMethod, cycle, reason.into()))
    }
}

/// Review the sampling rate at the end of `cycle`.
///
/// `recent` is the task type's cycle history; only cycles after the last
/// recorded change count toward lowering the rate.
pub fn adjust_sampling(
    plan: &SamplingPlan,
    recent: &[CycleSummary],
    escapes: u32,
    cycle: u32,
    params: &SamplingParams,
    policy: &TransitionPolicy,
) -> SamplingPlan {
    if escapes > 0 {
        let to = round_rate((plan.rate + params.step).min(1.0));
        if to == plan.rate {
            return plan.clone();
        }
        return plan.changed(
            to,
            SamplingBasis::Adjustment,
            cycle,
            format!("{escapes} escape(s) detected outside sampling"),
        );
    }

    let since = plan.last_change_cycle().unwrap_or(0);
    let fresh: Vec<&CycleSummary> = recent.iter().filter(|c| c.cycle_index > since).collect();
    let needed = params.clean_cycles_to_lower as usize;
    if fresh.len() >= needed && fresh[fresh.len() - needed..].iter().all(|c| c.is_clean(policy)) {
        let to = round_rate((plan.rate - params.step).max(params.min_rate));
        if to < plan.rate {
            return plan.changed(
                to,
                SamplingBasis::Adjustment,
                cycle,
                format!("{needed} consecutive clean cycles"),
            );
        }
    }
    plan.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::governance::evidence::test_support::*;
    use crate::governance::Tier;

    fn plan(rate: f64) -> SamplingPlan {
        SamplingPlan {
            rate,
            ..SamplingPlan::initial("unit-tests".into(), &SamplingParams::default())
        }
    }

    #[test]
    fn no_history_starts_at_twenty_percent() {
        let p = SamplingPlan::initial("x".into(), &SamplingParams::default());
        assert_eq!(p.rate, 0.20);
        assert_eq!(p.basis, SamplingBasis::DefaultStart);
    }

    #[test]
    fn escape_raises_fifteen_to_twenty_five() {
        let p = adjust_sampling(
            &plan(0.15),
            &[],
            1,
            1,
            &SamplingParams::default(),
            &TransitionPolicy::default(),
        );
        assert_eq!(p.rate, 0.25);
        assert_eq!(p.basis, SamplingBasis::Adjustment);
        assert_eq!(p.history.len(), 1);
    }

    #[test]
    fn floor_holds() {
        let p = adjust_sampling(
            &plan(0.10),
            &clean_run(1, 3, Tier::Tier3),
            0,
            3,
            &SamplingParams::default(),
            &TransitionPolicy::default(),
        );
        assert_eq!(p.rate, 0.10);
        assert!(p.history.is_empty());
    }

    #[test]
    fn clean_run_lowers_once_then_needs_fresh_run() {
        let params = SamplingParams::default();
        let policy = TransitionPolicy::default();
        let cycles = clean_run(1, 4, Tier::Tier3);
        let p = adjust_sampling(&plan(0.30), &cycles[..3], 0, 3, &params, &policy);
        assert_eq!(p.rate, 0.20);
        let p2 = adjust_sampling(&p, &cycles, 0, 4, &params, &policy);
        assert_eq!(p2.rate, 0.20, "only one clean cycle since the change");
    }

    #[test]
    fn cap_at_one() {
        let p = adjust_sampling(
            &plan(0.95),
            &[],
            2,
            1,
            &SamplingParams::default(),
            &TransitionPolicy::default(),
        );
        assert_eq!(p.rate, 1.0);
    }

    #[test]
    fn sqc_rate_is_stored_with_basis() {
        let params = SamplingParams::default();
        let p = plan(0.2).with_sqc_rate(0.12, 5, &params, "c=0 plan").unwrap();
        assert_eq!(p.basis, SamplingBasis::SqcMethod);
        assert_eq!(
            plan(0.2).with_sqc_rate(0.05, 5, &params, ""),
            Err(SamplingError::BelowMinimum { rate: 0.05, min: 0.10 })
        );
    }
}
