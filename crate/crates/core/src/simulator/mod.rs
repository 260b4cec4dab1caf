//! Seeded discrete-time simulation of hybrid-team cycles.
//!
//! Each cycle, every task type produces AI outputs with some true error
//! rate. Reviewers check all outputs at Tiers 1 and 2 and a sampled share at
//! Tiers 3 and 4; integration catches part of what review misses. The
//! per-cycle counts become evidence ledger entries, and every governance
//! decision (promotion, demotion, sampling changes, erosion scheduling) is
//! made by the same library functions the registry engine uses.

mod config;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    ErrorOverride, ReviewerModel, RngKind, SimAssessment, SimConfig, SimError, SimTaskType,
    SweepConfig,
};

use crate::governance::{
    apply_demotion, apply_promotion, check_promotion, classify, derive_capability_rating,
    Assessment, CycleSummary, DemotionTrigger, EvidenceLedger, Tier, Trigger,
};
use crate::ids::{PersonId, TaskTypeId, Timestamp};
use crate::quality::sampling::{SamplingBasis, SamplingPlan};
use crate::quality::{adjust_sampling, is_eroding};

/// Probability that an AI output carries an error that escapes both
/// validation and integration.
pub fn analytic_escape_rate(
    true_error_rate: f64,
    sampling_rate: f64,
    detection_probability: f64,
    integration_catch_probability: f64,
) -> Result<f64, SimError> {
    config::check_probability("true_error_rate", true_error_rate)?;
    config::check_probability("sampling_rate", sampling_rate)?;
    config::check_probability("detection_probability", detection_probability)?;
    config::check_probability("integration_catch_probability", integration_catch_probability)?;
    let (e, s, d, i) = (
        true_error_rate,
        sampling_rate,
        detection_probability,
        integration_catch_probability,
    );
    Ok(e * (s * (1.0 - d) + (1.0 - s)) * (1.0 - i))
}

/// One task type in one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub cycle: u32,
    pub task_type_id: String,
    pub tier: Tier,
    pub human_only: bool,
    pub true_error_rate: f64,
    pub sampling_rate: f64,
    pub detection_probability: f64,
    pub outputs: u32,
    pub errors: u32,
    pub validated: u32,
    pub detected: u32,
    pub critical_detected: u32,
    pub caught_at_integration: u32,
    pub escaped: u32,
    pub escaped_defect_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTransition {
    pub cycle: u32,
    pub task_type_id: String,
    pub from_tier: Tier,
    pub to_tier: Tier,
    pub trigger: Trigger,
    /// Promotions: cycles of evidence at the old tier, from the first cycle at
    /// that tier through the promotion cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promotion_latency: Option<u32>,
    /// Demotions: cycles between the triggering observation and the demotion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demotion_response: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub cycles: u32,
    pub total_outputs: u64,
    pub total_errors: u64,
    pub total_escaped: u64,
    pub escaped_defect_rate: f64,
    pub promotions: u32,
    pub demotions: u32,
    pub min_promotion_latency: Option<u32>,
    pub max_demotion_response: Option<u32>,
    pub tier_timeline: BTreeMap<String, Vec<Tier>>,
    /// Detection probability in force during each cycle.
    pub detection_trajectory: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub seed: u64,
    pub rng: RngKind,
    pub rows: Vec<CycleRow>,
    pub transitions: Vec<SimTransition>,
    pub summary: SimSummary,
}

impl SimResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    /// Per-cycle time series, one row per task type and cycle.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

struct TypeState {
    id: TaskTypeId,
    spec: SimTaskType,
    tier: Tier,
    error_rate: f64,
    detection: f64,
    ledger: EvidenceLedger,
    sampling: SamplingPlan,
    cycles_since_human_only: u32,
    human_only_next: bool,
}

const SIM_ACTOR: &str = "simulator";

fn cycle_time(cycle: u32) -> Timestamp {
    chrono::DateTime::UNIX_EPOCH + chrono::Duration::days(14 * cycle as i64)
}

/// Run one simulation. Identical configs give identical results.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let mut rng = match config.rng {
        RngKind::Chacha8 => ChaCha8Rng::seed_from_u64(config.seed),
    };
    let actor = PersonId::new(SIM_ACTOR);
    let policy = &config.policy;
    let i_catch = config.integration_catch_probability;

    let mut types: Vec<TypeState> = config
        .task_types
        .iter()
        .map(|t| {
            let id = TaskTypeId::new(t.id.clone());
            let mut sampling = SamplingPlan::initial(id.clone(), &config.sampling);
            if let Some(rate) = t.initial_sampling_rate {
                sampling.rate = rate;
                sampling.basis = SamplingBasis::DefaultStart;
            }
            TypeState {
                id,
                spec: t.clone(),
                tier: t.start_tier,
                error_rate: t.true_error_rate,
                detection: config.reviewers.detection_probability,
                ledger: EvidenceLedger::new(),
                sampling,
                cycles_since_human_only: 0,
                human_only_next: false,
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut transitions = Vec::new();
    let mut timeline: BTreeMap<String, Vec<Tier>> = BTreeMap::new();
    let mut trajectory: BTreeMap<String, Vec<f64>> = BTreeMap::new();

    for cycle in 1..=config.cycles {
        for st in types.iter_mut() {
            let e = st
                .spec
                .error_overrides
                .iter()
                .find(|o| o.cycle == cycle)
                .map_or(st.error_rate, |o| o.rate);
            let human_only = st.human_only_next || st.tier == Tier::AiRestricted;
            st.human_only_next = false;
            let s = if st.tier.is_sampled() { st.sampling.rate } else { 1.0 };
            let d = st.detection;
            timeline.entry(st.spec.id.clone()).or_default().push(st.tier);
            trajectory.entry(st.spec.id.clone()).or_default().push(d);

            let mut row = CycleRow {
                cycle,
                task_type_id: st.spec.id.clone(),
                tier: st.tier,
                human_only,
                true_error_rate: e,
                sampling_rate: s,
                detection_probability: d,
                outputs: 0,
                errors: 0,
                validated: 0,
                detected: 0,
                critical_detected: 0,
                caught_at_integration: 0,
                escaped: 0,
                escaped_defect_rate: 0.0,
            };

            if !human_only {
                row.outputs = st.spec.outputs_per_cycle;
                for _ in 0..row.outputs {
                    let sampled = s >= 1.0 || rng.gen_bool(s);
                    row.validated += sampled as u32;
                    if !rng.gen_bool(e) {
                        continue;
                    }
                    row.errors += 1;
                    let critical = rng.gen_bool(st.spec.critical_share);
                    if sampled && rng.gen_bool(d) {
                        row.detected += 1;
                        row.critical_detected += critical as u32;
                    } else if rng.gen_bool(i_catch) {
                        row.caught_at_integration += 1;
                    } else {
                        row.escaped += 1;
                    }
                }
                row.escaped_defect_rate = row.escaped as f64 / row.outputs as f64;

                let summary = CycleSummary {
                    cycle_index: cycle,
                    tier_during_cycle: st.tier,
                    outputs_validated: row.validated,
                    outputs_with_major_or_critical: row.detected,
                    critical_count: row.critical_detected,
                    sampled_fraction: s,
                };
                st.ledger.push(summary).expect("cycle indices increase");

                if config.transitions_enabled {
                    if let Some(t) = decide_transition(st, &row, cycle, config, &actor) {
                        transitions.push(t);
                    }
                }
                if config.adaptive_sampling && row.tier.is_sampled() {
                    let escapes = row.caught_at_integration + row.escaped;
                    st.sampling = adjust_sampling(
                        &st.sampling,
                        st.ledger.cycles(),
                        escapes,
                        cycle,
                        &config.sampling,
                        policy,
                    );
                }
            }

            if human_only {
                st.cycles_since_human_only = 0;
                st.detection = config.reviewers.recovery_on_human_only_cycle;
            } else {
                st.cycles_since_human_only += 1;
                st.detection *= 1.0 - config.reviewers.decay_per_idle_cycle;
            }
            if config.erosion_schedule
                && is_eroding(st.tier, st.cycles_since_human_only, &config.erosion)
            {
                st.human_only_next = true;
            }
            st.error_rate = (st.error_rate + st.spec.drift).clamp(0.0, 1.0);
            rows.push(row);
        }
    }

    let summary = summarize(config.cycles, &rows, &transitions, timeline, trajectory);
    Ok(SimResult {
        seed: config.seed,
        rng: config.rng,
        rows,
        transitions,
        summary,
    })
}

/// Demotion first (critical finding, then breach run), otherwise a promotion
/// if the ledger supports one and the matrix ceiling allows it.
fn decide_transition(
    st: &mut TypeState,
    row: &CycleRow,
    cycle: u32,
    config: &SimConfig,
    actor: &PersonId,
) -> Option<SimTransition> {
    let policy = &config.policy;
    let ts = cycle_time(cycle);
    let trigger = if row.critical_detected > 0 && st.tier.level() >= 2 {
        Some(DemotionTrigger::CriticalError)
    } else if st.ledger.breach_streak(policy) >= policy.consecutive_breach_limit {
        Some(DemotionTrigger::ConsecutiveBreach)
    } else {
        None
    };

    if let Some(trigger) = trigger {
        let evidence = st.ledger.tail(policy.consecutive_breach_limit as usize).to_vec();
        let ev = apply_demotion(&st.id, st.tier, trigger, actor, policy, cycle, evidence, "simulated", ts)
            .ok()?;
        st.tier = ev.to_tier;
        return Some(SimTransition {
            cycle,
            task_type_id: st.spec.id.clone(),
            from_tier: ev.from_tier,
            to_tier: ev.to_tier,
            trigger: ev.trigger(),
            promotion_latency: None,
            demotion_response: Some(ev.cycle - cycle),
        });
    }

    if !check_promotion(st.tier, &st.ledger, policy, true).eligible {
        return None;
    }
    if let Some(a) = st.spec.assessment {
        let ceiling = classify(&Assessment::new(
            a.structuredness,
            a.verifiability,
            a.consequence,
            derive_capability_rating(&st.ledger, policy),
        ))
        .tier;
        if st.tier.next().map_or(true, |next| next > ceiling) {
            return None;
        }
    }
    let latency = st.ledger.trailing_at(st.tier).len() as u32;
    let ev = apply_promotion(&st.id, st.tier, &st.ledger, policy, true, actor, cycle, "simulated", ts).ok()?;
    st.tier = ev.to_tier;
    Some(SimTransition {
        cycle,
        task_type_id: st.spec.id.clone(),
        from_tier: ev.from_tier,
        to_tier: ev.to_tier,
        trigger: ev.trigger(),
        promotion_latency: Some(latency),
        demotion_response: None,
    })
}

fn summarize(
    cycles: u32,
    rows: &[CycleRow],
    transitions: &[SimTransition],
    tier_timeline: BTreeMap<String, Vec<Tier>>,
    detection_trajectory: BTreeMap<String, Vec<f64>>,
) -> SimSummary {
    let total_outputs: u64 = rows.iter().map(|r| r.outputs as u64).sum();
    let total_errors: u64 = rows.iter().map(|r| r.errors as u64).sum();
    let total_escaped: u64 = rows.iter().map(|r| r.escaped as u64).sum();
    SimSummary {
        cycles,
        total_outputs,
        total_errors,
        total_escaped,
        escaped_defect_rate: if total_outputs == 0 {
            0.0
        } else {
            total_escaped as f64 / total_outputs as f64
        },
        promotions: transitions.iter().filter(|t| t.promotion_latency.is_some()).count() as u32,
        demotions: transitions.iter().filter(|t| t.demotion_response.is_some()).count() as u32,
        min_promotion_latency: transitions.iter().filter_map(|t| t.promotion_latency).min(),
        max_demotion_response: transitions.iter().filter_map(|t| t.demotion_response).max(),
        tier_timeline,
        detection_trajectory,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub params: BTreeMap<String, f64>,
    pub summary: SimSummary,
}

/// Run every grid point in parallel; results keep grid order.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRun>, SimError> {
    sweep
        .expand()?
        .into_par_iter()
        .map(|(params, cfg)| {
            run_simulation(&cfg).map(|r| SweepRun {
                params,
                summary: r.summary,
            })
        })
        .collect()
}

/// Sweep results as one CSV row per grid point.
pub fn sweep_csv(runs: &[SweepRun]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names: Vec<&String> = runs.first().map(|r| r.params.keys().collect()).unwrap_or_default();
    let mut header: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    header.extend(
        ["escaped_defect_rate", "total_outputs", "promotions", "demotions", "min_promotion_latency"]
            .map(String::from),
    );
    w.write_record(&header).expect("writing to memory");
    for r in runs {
        let mut rec: Vec<String> = r.params.values().map(|v| v.to_string()).collect();
        let s = &r.summary;
        rec.push(format!("{:.6}", s.escaped_defect_rate));
        rec.push(s.total_outputs.to_string());
        rec.push(s.promotions.to_string());
        rec.push(s.demotions.to_string());
        rec.push(s.min_promotion_latency.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base(e: f64, s: f64, d: f64, i: f64) -> SimConfig {
        SimConfig {
            seed: 7,
            rng: RngKind::Chacha8,
            cycles: 40,
            task_types: vec![SimTaskType {
                id: "unit-tests".into(),
                start_tier: Tier::Tier3,
                true_error_rate: e,
                drift: 0.0,
                outputs_per_cycle: 500,
                critical_share: 0.0,
                initial_sampling_rate: Some(s),
                assessment: None,
                error_overrides: Vec::new(),
            }],
            reviewers: ReviewerModel {
                detection_probability: d,
                decay_per_idle_cycle: 0.0,
                recovery_on_human_only_cycle: d,
            },
            integration_catch_probability: i,
            policy: Default::default(),
            sampling: Default::default(),
            erosion: Default::default(),
            erosion_schedule: false,
            transitions_enabled: false,
            adaptive_sampling: false,
        }
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_escape_rate(0.0, 0.3, 0.5, 0.2).unwrap(), 0.0);
        assert!((analytic_escape_rate(0.2, 0.25, 1.0, 0.5).unwrap() - 0.075).abs() < 1e-12);
        assert_eq!(analytic_escape_rate(0.7, 1.0, 1.0, 0.1).unwrap(), 0.0);
        assert!(analytic_escape_rate(1.2, 0.3, 0.5, 0.2).is_err());
    }

    #[test]
    fn analytic_matches_outcome_tree_enumeration() {
        // Leaves: (error?, sampled?, detected?, integration caught?).
        let (e, s, d, i) = (0.3, 0.4, 0.7, 0.25);
        let mut escape = 0.0;
        for err in [true, false] {
            for sampled in [true, false] {
                for det in [true, false] {
                    for caught in [true, false] {
                        let p = [(err, e), (sampled, s), (det, d), (caught, i)]
                            .iter()
                            .map(|&(b, p)| if b { p } else { 1.0 - p })
                            .product::<f64>();
                        let found_in_review = sampled && det;
                        if err && !found_in_review && !caught {
                            escape += p;
                        }
                    }
                }
            }
        }
        assert!((analytic_escape_rate(e, s, d, i).unwrap() - escape).abs() < 1e-12);
    }

    #[test]
    fn perfect_review_escapes_nothing() {
        let r = run_simulation(&base(0.3, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(r.summary.total_escaped, 0);
    }

    #[test]
    fn spike_demotes_in_breaching_cycle() {
        let mut c = base(0.0, 1.0, 1.0, 0.5);
        c.task_types[0].start_tier = Tier::Tier2;
        c.task_types[0].outputs_per_cycle = 50;
        c.task_types[0].error_overrides = vec![
            ErrorOverride { cycle: 4, rate: 0.5 },
            ErrorOverride { cycle: 5, rate: 0.5 },
        ];
        c.transitions_enabled = true;
        c.cycles = 6;
        let r = run_simulation(&c).unwrap();
        let d: Vec<_> = r.transitions.iter().filter(|t| t.demotion_response.is_some()).collect();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].cycle, 5);
        assert_eq!(d[0].trigger, Trigger::ConsecutiveBreach);
        assert_eq!((d[0].from_tier, d[0].to_tier), (Tier::Tier2, Tier::Tier1));
        assert_eq!(d[0].demotion_response, Some(0));
    }

    #[test]
    fn sweep_expands_grid_in_order() {
        let mut grid = BTreeMap::new();
        grid.insert("seed".to_string(), vec![1.0, 2.0]);
        grid.insert("reviewers.detection_probability".to_string(), vec![0.5, 0.9]);
        let sweep = SweepConfig {
            base: base(0.2, 0.25, 1.0, 0.5),
            grid,
        };
        let runs = run_sweep(&sweep).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs[0].params["reviewers.detection_probability"], 0.5);
        assert_eq!(runs[0].params["seed"], 1.0);
        assert_eq!(runs[1].params["seed"], 2.0);
        assert_eq!(sweep_csv(&runs).lines().count(), 5);
    }
}
