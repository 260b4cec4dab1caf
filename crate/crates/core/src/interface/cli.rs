//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 I/O error,
//! 3 lint findings, 64 usage error (usage text goes to stderr).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::config::{AdoptionMode, EngineConfig, DEFAULT_CONFIG_FILE};
use super::engine::*;
use crate::governance::matrix::EXPLICIT_ROWS;
use crate::governance::{Assessment, CapabilityRating, DemotionTrigger, Level, Tier};
use crate::ids::{CampaignId, ItemId, PersonId, SessionId, SprintId, TaskTypeId, Timestamp};
use crate::planning::{ItemStatus, SprintPlan};
use crate::quality::{
    ChecklistDomain, ChecklistTemplate, CheckResult, DetectedIn, Finding, PlantedError, Severity,
    ValidationOutcome,
};
use crate::registry::events::{
    DeficienciesSettled, Producer, ProvenanceRecord, RegistryEvent, SessionAction, Settlement,
    ViolationNoted,
};
use crate::registry::export::Entity;
use crate::registry::store::{FileStore, StoreError};
use crate::registry::{QueryFilter, RegistryError};
use crate::simulator::{run_simulation, run_sweep, sweep_csv, SimConfig, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_LINT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "tiergate", version, about = "Delegation governance for hybrid human/AI teams")]
pub struct Cli {
    /// Engine config file.
    #[arg(long, global = true, env = "TIERGATE_CONFIG", default_value = DEFAULT_CONFIG_FILE)]
    pub config: PathBuf,
    /// Team member performing the action.
    #[arg(long = "as", global = true, env = "TIERGATE_ACTOR")]
    pub actor: Option<String>,
    /// Event timestamp (RFC 3339); defaults to now.
    #[arg(long, global = true)]
    pub at: Option<Timestamp>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create the config, registry, checklist templates and tier definitions.
    Init {
        /// Only ownership tagging, checklist recording and the retro prompt.
        #[arg(long)]
        minimal: bool,
        /// Directory to set up; defaults to the config file's directory.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Classify an assessment; with --item, record the classification.
    Classify(ClassifyArgs),
    /// Register a task type in the tier registry.
    Register(RegisterArgs),
    /// Assign a named owner to an item.
    Assign { item: String, owner: String },
    /// Estimate a sprint plan and check it against validation capacity.
    Plan {
        /// Sprint plan JSON file.
        plan: PathBuf,
    },
    /// Record a validation outcome.
    Record(RecordArgs),
    /// Demote a task type one tier, effective immediately.
    Demote {
        task_type: String,
        #[arg(long)]
        reason: String,
        #[arg(long, default_value = "member_request")]
        trigger: DemotionTrigger,
    },
    /// Promotion eligibility for one or every task type.
    PromoteCheck {
        task_type: Option<String>,
        /// Validation capacity for the next tier is confirmed.
        #[arg(long)]
        capacity_ok: bool,
    },
    /// Apply an eligible promotion (Hybrid Work Owner only).
    Promote {
        task_type: String,
        #[arg(long)]
        rationale: String,
        #[arg(long)]
        capacity_ok: bool,
    },
    /// Cycle metrics, eligibility, erosion flags and retro questions.
    Retro {
        /// Cycle to report; defaults to the current cycle.
        #[arg(long)]
        cycle: Option<u32>,
        /// Close the current cycle, applying breach demotions and sampling reviews.
        #[arg(long)]
        close: bool,
    },
    /// Check the registry, and optionally a plan, for process mistakes.
    Lint {
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run a simulation (or a parameter sweep) from a TOML config.
    Sim {
        config: PathBuf,
        #[arg(long)]
        sweep: bool,
        /// Per-cycle rows (or per-grid-point rows) as CSV.
        #[arg(long)]
        csv: bool,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Move an item along the board.
    Status { item: String, status: ItemStatus },
    /// Record who or what produced an item.
    Provenance {
        item: String,
        /// `human`, `ai:<system>` or `hybrid:<system>`.
        #[arg(long)]
        producer: String,
        #[arg(long, default_value = "")]
        tool: String,
        #[arg(long, default_value = "")]
        context: String,
        #[arg(long)]
        validated_by: String,
    },
    /// Confirm an item works with the rest of the system.
    Integration {
        item: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Settle an item's review findings as resolved or accepted risk.
    Settle {
        item: String,
        #[arg(long, value_parser = parse_settlement)]
        resolution: Settlement,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Note a process violation on the board.
    Violation {
        #[arg(long)]
        description: String,
        #[arg(long)]
        person: Option<String>,
        #[arg(long = "type")]
        task_type: Option<String>,
        #[arg(long)]
        item: Option<String>,
    },
    /// Schedule or complete a human-only cycle.
    HumanOnly {
        #[command(subcommand)]
        action: HumanOnlyCmd,
    },
    /// Lower a task type's capability rating.
    Downgrade {
        task_type: String,
        #[arg(long)]
        to: CapabilityRating,
        #[arg(long)]
        reason: String,
    },
    /// Set a Tier 3/4 sampling rate from a quality-control calculation.
    Sampling {
        task_type: String,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        reason: String,
    },
    /// Record a co-production session action given as JSON.
    Session { session: String, action: String },
    /// Error-injection audits.
    Inject {
        #[command(subcommand)]
        action: InjectCmd,
    },
    /// Events and items matching key=value filters.
    Query { filters: Vec<String> },
    /// One registry table as CSV.
    Export { entity: Entity },
    /// Definition of Done state for an item.
    Dod { item: String },
    /// Metrics for a task type and cycle.
    Metrics {
        task_type: String,
        #[arg(long)]
        cycle: Option<u32>,
    },
    /// Who holds each governance function at the configured team size.
    Scaling,
    /// Competence erosion status per task type.
    Erosion,
    /// Raw registry events.
    Events {
        #[arg(long, default_value_t = 0)]
        after: u64,
    },
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Structuredness.
    #[arg(long = "s")]
    pub structuredness: Option<Level>,
    /// Verifiability.
    #[arg(long = "v")]
    pub verifiability: Option<Level>,
    /// Consequence of error.
    #[arg(long = "c")]
    pub consequence: Option<Level>,
    /// Demonstrated capability.
    #[arg(long = "d")]
    pub capability: Option<CapabilityRating>,
    #[arg(long)]
    pub item: Option<String>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long = "type")]
    pub task_type: Option<String>,
    #[arg(long)]
    pub sprint: Option<String>,
    #[arg(long)]
    pub owner: Option<String>,
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Tier that differs from the matrix result; needs --rationale.
    #[arg(long)]
    pub tier: Option<Tier>,
    #[arg(long)]
    pub rationale: Option<String>,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    pub task_type: String,
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub domain: ChecklistDomain,
    #[arg(long = "s")]
    pub structuredness: Level,
    #[arg(long = "v")]
    pub verifiability: Level,
    #[arg(long = "c")]
    pub consequence: Level,
    #[arg(long = "d", default_value = "unproven")]
    pub capability: CapabilityRating,
    #[arg(long)]
    pub tier: Option<Tier>,
    #[arg(long)]
    pub rationale: Option<String>,
    #[arg(long)]
    pub baseline_evidence: Option<String>,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Outcome JSON file (`-` for stdin); replaces the flags below.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub item: Option<String>,
    /// Defaults to the acting member.
    #[arg(long)]
    pub reviewer: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub minutes: u32,
    #[arg(long)]
    pub first_pass: bool,
    #[arg(long, default_value = "review", value_parser = parse_detected_in)]
    pub detected_in: DetectedIn,
    /// `check_id=pass|fail|n/a`, repeatable.
    #[arg(long = "check")]
    pub checks: Vec<String>,
    /// `severity:category[:note]`, repeatable.
    #[arg(long = "finding")]
    pub findings: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum HumanOnlyCmd {
    /// Put an AI-restricted item for the task type on the backlog.
    Schedule {
        task_type: String,
        #[arg(long)]
        item: Option<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        sprint: Option<String>,
        #[arg(long)]
        owner: Option<String>,
        #[arg(long)]
        baseline: f64,
    },
    /// Record that a human-only cycle was completed.
    Complete {
        task_type: String,
        #[arg(long)]
        item: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum InjectCmd {
    /// Plant known errors; `item:severity:description`, repeatable.
    Plant {
        campaign: String,
        #[arg(long = "error", required = true)]
        errors: Vec<String>,
    },
    /// Close the campaign and report detection.
    Resolve { campaign: String },
}

fn parse_settlement(s: &str) -> Result<Settlement, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("expected resolved or accepted_risk, got {s:?}"))
}

fn parse_detected_in(s: &str) -> Result<DetectedIn, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("expected review, sampling, integration or post_delivery, got {s:?}"))
}

/// A failed command: exit code plus message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(m: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: m.into() }
    }
    fn domain(m: impl std::fmt::Display) -> Self {
        Self { code: EXIT_DOMAIN, message: m.to_string() }
    }
    fn io(m: impl std::fmt::Display) -> Self {
        Self { code: EXIT_IO, message: m.to_string() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Registry(RegistryError::Store(_)) => EXIT_IO,
            _ if e.class() == ErrorClass::Io => EXIT_IO,
            _ => EXIT_DOMAIN,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn actor(&self) -> Result<PersonId, Failure> {
        match &self.cli.actor {
            Some(a) if !a.trim().is_empty() => Ok(PersonId::new(a.trim())),
            _ => Err(Failure::usage(
                "this command writes to the registry; name yourself with --as or TIERGATE_ACTOR",
            )),
        }
    }

    fn now(&self) -> Timestamp {
        self.cli.at.unwrap_or_else(chrono::Utc::now)
    }

    fn engine(&self, writable: bool) -> Result<Engine, Failure> {
        Ok(Engine::load(&self.cli.config, writable)?)
    }

    /// JSON when asked for, otherwise the text rendering.
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> Result<(), Failure> {
        let s = if self.cli.json {
            serde_json::to_string_pretty(value).expect("output serializes")
        } else {
            text()
        };
        writeln!(self.out, "{}", s.trim_end()).map_err(Failure::io)
    }

    fn emit_events(&mut self, events: &[RegistryEvent]) -> Result<(), Failure> {
        if self.cli.json {
            return self.emit(&events, String::new);
        }
        for e in events {
            writeln!(self.out, "{}", e.to_line()).map_err(Failure::io)?;
        }
        Ok(())
    }

    fn prompt<T: std::str::FromStr>(&mut self, label: &str) -> Result<T, Failure>
    where
        T::Err: std::fmt::Display,
    {
        loop {
            write!(self.err, "{label}: ").map_err(Failure::io)?;
            self.err.flush().map_err(Failure::io)?;
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(Failure::io)? == 0 {
                return Err(Failure::usage(format!("missing {label}")));
            }
            match line.trim().parse() {
                Ok(v) => return Ok(v),
                Err(e) => writeln!(self.err, "{e}").map_err(Failure::io)?,
            }
        }
    }
}

/// Run the CLI with explicit streams; returns the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut ctx = Ctx { cli: &cli, input, out, err };
    match dispatch(&mut ctx) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(ctx.err, "error: {}", f.message);
            f.code
        }
    }
}

/// Entry point for the binary.
pub fn main_with_env() -> i32 {
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run(std::env::args_os(), &mut input, &mut out, &mut err)
}

fn dispatch(ctx: &mut Ctx) -> CmdResult {
    let cli = ctx.cli;
    match &cli.command {
        Command::Init { minimal, dir } => init(ctx, *minimal, dir.as_deref()),
        Command::Classify(a) => classify_cmd(ctx, a),
        Command::Register(a) => {
            let actor = ctx.actor()?;
            let req = RegisterTaskType {
                task_type_id: TaskTypeId::new(&a.task_type),
                name: a.name.clone(),
                checklist_domain: a.domain,
                assessment: Assessment::new(a.structuredness, a.verifiability, a.consequence, a.capability),
                tier: a.tier,
                override_rationale: a.rationale.clone(),
                baseline_evidence: a.baseline_evidence.clone(),
            };
            write(ctx, |e, ts| e.register_task_type(ts, &actor, req).map(|ev| vec![ev]))
        }
        Command::Assign { item, owner } => {
            let actor = ctx.actor()?;
            write(ctx, |e, ts| {
                e.assign_owner(ts, &actor, ItemId::new(item), PersonId::new(owner)).map(|ev| vec![ev])
            })
        }
        Command::Plan { plan } => {
            let plan = SprintPlan::load(plan).map_err(plan_error)?;
            let engine = ctx.engine(false)?;
            let report = engine.plan(plan)?;
            let feasible = report.budget.feasible;
            ctx.emit(&report, || render_plan(&report))?;
            Ok(if feasible { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Record(a) => {
            let actor = ctx.actor()?;
            let outcome = outcome_from_args(ctx, a, &actor)?;
            write(ctx, |e, ts| e.record_outcome(ts, &actor, outcome))
        }
        Command::Demote { task_type, reason, trigger } => {
            let actor = ctx.actor()?;
            let req = DemoteRequest { trigger: *trigger, rationale: reason.clone() };
            write(ctx, |e, ts| e.demote(ts, &actor, &TaskTypeId::new(task_type), req).map(|ev| vec![ev]))
        }
        Command::PromoteCheck { task_type, capacity_ok } => {
            let engine = ctx.engine(false)?;
            let tt = task_type.as_deref().map(TaskTypeId::new);
            let reports = engine.promotion_check(tt.as_ref(), *capacity_ok)?;
            ctx.emit(&reports, || reports.iter().map(render_promotion).collect())?;
            Ok(EXIT_OK)
        }
        Command::Promote { task_type, rationale, capacity_ok } => {
            let actor = ctx.actor()?;
            let req = PromoteRequest { capacity_ok: *capacity_ok, rationale: rationale.clone() };
            write(ctx, |e, ts| e.promote(ts, &actor, &TaskTypeId::new(task_type), req).map(|ev| vec![ev]))
        }
        Command::Retro { cycle, close } => retro(ctx, *cycle, *close),
        Command::Lint { plan } => {
            let plan = plan.as_deref().map(SprintPlan::load).transpose().map_err(plan_error)?;
            let engine = ctx.engine(false)?;
            let findings = engine.lint(plan)?;
            ctx.emit(&findings, || {
                if findings.is_empty() {
                    "no findings".into()
                } else {
                    findings.iter().map(|f| format!("{f}\n")).collect()
                }
            })?;
            Ok(if findings.is_empty() { EXIT_OK } else { EXIT_LINT })
        }
        Command::Sim { config, sweep, csv, out } => sim(ctx, config, *sweep, *csv, out.as_deref()),
        Command::Serve { bind } => {
            let engine = ctx.engine(true)?;
            let bind = bind.clone().unwrap_or_else(|| engine.config().service.bind.clone());
            writeln!(ctx.err, "serving on http://{bind}/v1").map_err(Failure::io)?;
            super::service::serve_blocking(engine, &bind).map_err(Failure::io)?;
            Ok(EXIT_OK)
        }
        Command::Status { item, status } => {
            let actor = ctx.actor()?;
            write(ctx, |e, ts| e.set_status(ts, &actor, ItemId::new(item), *status).map(|ev| vec![ev]))
        }
        Command::Provenance { item, producer, tool, context, validated_by } => {
            let actor = ctx.actor()?;
            let rec = ProvenanceRecord {
                item_id: ItemId::new(item),
                producer: parse_producer(producer)?,
                tool: tool.clone(),
                generation_context: context.clone(),
                validated_by: PersonId::new(validated_by),
            };
            write(ctx, |e, ts| e.record_provenance(ts, &actor, rec).map(|ev| vec![ev]))
        }
        Command::Integration { item, note } => {
            let actor = ctx.actor()?;
            write(ctx, |e, ts| {
                e.verify_integration(ts, &actor, ItemId::new(item), note.clone()).map(|ev| vec![ev])
            })
        }
        Command::Settle { item, resolution, note } => {
            let actor = ctx.actor()?;
            let s = DeficienciesSettled {
                item_id: ItemId::new(item),
                resolution: *resolution,
                note: note.clone(),
            };
            write(ctx, |e, ts| e.settle_deficiencies(ts, &actor, s).map(|ev| vec![ev]))
        }
        Command::Violation { description, person, task_type, item } => {
            let actor = ctx.actor()?;
            let v = ViolationNoted {
                description: description.clone(),
                person: person.as_deref().map(PersonId::new),
                task_type_id: task_type.as_deref().map(TaskTypeId::new),
                item_id: item.as_deref().map(ItemId::new),
            };
            write(ctx, |e, ts| e.note_violation(ts, &actor, v).map(|ev| vec![ev]))
        }
        Command::HumanOnly { action } => {
            let actor = ctx.actor()?;
            match action {
                HumanOnlyCmd::Schedule { task_type, item, title, sprint, owner, baseline } => {
                    let req = ScheduleHumanOnly {
                        item_id: item.as_deref().map(ItemId::new),
                        title: title.clone(),
                        sprint: sprint.as_deref().map(SprintId::new),
                        owner: owner.as_deref().map(PersonId::new),
                        baseline_effort: *baseline,
                    };
                    write(ctx, |e, ts| {
                        e.schedule_human_only(ts, &actor, &TaskTypeId::new(task_type), req).map(|ev| vec![ev])
                    })
                }
                HumanOnlyCmd::Complete { task_type, item } => write(ctx, |e, ts| {
                    e.complete_human_only(ts, &actor, &TaskTypeId::new(task_type), item.as_deref().map(ItemId::new))
                        .map(|ev| vec![ev])
                }),
            }
        }
        Command::Downgrade { task_type, to, reason } => {
            let actor = ctx.actor()?;
            let req = DowngradeRequest { to: *to, rationale: reason.clone() };
            write(ctx, |e, ts| {
                e.downgrade_rating(ts, &actor, &TaskTypeId::new(task_type), req).map(|ev| vec![ev])
            })
        }
        Command::Sampling { task_type, rate, reason } => {
            let actor = ctx.actor()?;
            let req = SqcRateRequest { rate: *rate, reason: reason.clone() };
            write(ctx, |e, ts| {
                e.set_sqc_sampling_rate(ts, &actor, &TaskTypeId::new(task_type), req).map(|ev| vec![ev])
            })
        }
        Command::Session { session, action } => {
            let actor = ctx.actor()?;
            let action: SessionAction =
                serde_json::from_str(action).map_err(|e| Failure::usage(format!("session action: {e}")))?;
            write(ctx, |e, ts| e.session(ts, &actor, SessionId::new(session), action).map(|ev| vec![ev]))
        }
        Command::Inject { action } => inject(ctx, action),
        Command::Query { filters } => {
            let filter = QueryFilter::parse(filters.iter().map(String::as_str)).map_err(|e| Failure::usage(e.to_string()))?;
            let engine = ctx.engine(false)?;
            let result = engine.query(&filter);
            ctx.emit(&result, || {
                let mut s = String::new();
                for e in &result.events {
                    let _ = writeln!(
                        s,
                        "#{} cycle {} {} by {}{}{}",
                        e.event_id,
                        e.cycle,
                        e.kind.as_str(),
                        e.actor,
                        e.task_type_id.as_ref().map(|t| format!(" type={t}")).unwrap_or_default(),
                        e.item_id.as_ref().map(|i| format!(" item={i}")).unwrap_or_default(),
                    );
                }
                let items: Vec<_> = result.items.iter().map(ItemId::as_str).collect();
                let _ = writeln!(s, "items: {}", items.join(", "));
                s
            })?;
            Ok(EXIT_OK)
        }
        Command::Export { entity } => {
            let engine = ctx.engine(false)?;
            write!(ctx.out, "{}", engine.export(*entity)).map_err(Failure::io)?;
            Ok(EXIT_OK)
        }
        Command::Dod { item } => {
            let engine = ctx.engine(false)?;
            let dod = engine.dod(&ItemId::new(item))?;
            let eligible = dod.is_done_eligible();
            ctx.emit(&dod, || {
                if eligible {
                    "done-eligible".into()
                } else {
                    format!("not done-eligible; unmet: {}", dod.unmet().join(", "))
                }
            })?;
            Ok(EXIT_OK)
        }
        Command::Metrics { task_type, cycle } => {
            let engine = ctx.engine(false)?;
            let cycle = cycle.unwrap_or(engine.snapshot().current_cycle);
            let report = engine.cycle_metrics(&TaskTypeId::new(task_type), cycle)?;
            ctx.emit(&report, || render_metrics(&report))?;
            Ok(EXIT_OK)
        }
        Command::Scaling => {
            let engine = ctx.engine(false)?;
            let profile = engine.scaling();
            ctx.emit(&profile, || profile.to_table())?;
            Ok(EXIT_OK)
        }
        Command::Erosion => {
            let engine = ctx.engine(false)?;
            let status = engine.erosion();
            ctx.emit(&status, || {
                status
                    .iter()
                    .map(|s| {
                        format!(
                            "{} ({}): {} cycles since human-only, threshold {}{}\n",
                            s.task_type_id,
                            s.tier,
                            s.cycles_since_human_only,
                            s.threshold,
                            if s.flagged { " FLAGGED" } else { "" }
                        )
                    })
                    .collect()
            })?;
            Ok(EXIT_OK)
        }
        Command::Events { after } => {
            let engine = ctx.engine(false)?;
            let events = engine.events_after(*after).to_vec();
            ctx.emit_events(&events)?;
            Ok(EXIT_OK)
        }
    }
}

/// Open the registry as writer, run `f`, print the appended events.
fn write(
    ctx: &mut Ctx,
    f: impl FnOnce(&mut Engine, Timestamp) -> EngineResult<Vec<RegistryEvent>>,
) -> CmdResult {
    let mut engine = ctx.engine(true)?;
    let events = f(&mut engine, ctx.now())?;
    ctx.emit_events(&events)?;
    Ok(EXIT_OK)
}

fn plan_error(e: crate::planning::budget::PlanFileError) -> Failure {
    match e {
        crate::planning::budget::PlanFileError::Io { .. } => Failure::io(e),
        other => Failure::domain(other),
    }
}

fn parse_producer(s: &str) -> Result<Producer, Failure> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("human") {
        return Ok(Producer::Human);
    }
    match s.split_once(':') {
        Some(("ai", sys)) if !sys.is_empty() => Ok(Producer::AiSystem { system_id: sys.into() }),
        Some(("hybrid", sys)) if !sys.is_empty() => Ok(Producer::Hybrid { system_id: sys.into() }),
        _ => Err(Failure::usage(format!(
            "producer must be human, ai:<system> or hybrid:<system>, got {s:?}"
        ))),
    }
}

fn outcome_from_args(ctx: &mut Ctx, a: &RecordArgs, actor: &PersonId) -> Result<ValidationOutcome, Failure> {
    if let Some(path) = &a.file {
        let src = if path == Path::new("-") {
            let mut s = String::new();
            while ctx.input.read_line(&mut s).map_err(Failure::io)? > 0 {}
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?
        };
        return serde_json::from_str(&src).map_err(|e| Failure::domain(format!("outcome: {e}")));
    }
    let item = a.item.as_deref().ok_or_else(|| Failure::usage("record needs --item or --file"))?;
    let mut checklist_results = std::collections::BTreeMap::new();
    for c in &a.checks {
        let (id, r) = c
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("check {c:?} is not id=result")))?;
        let r: CheckResult = serde_json::from_value(serde_json::Value::String(r.trim().into()))
            .map_err(|_| Failure::usage(format!("check result {r:?} is not pass, fail or n/a")))?;
        checklist_results.insert(id.trim().to_string(), r);
    }
    let mut findings = Vec::new();
    for f in &a.findings {
        let mut parts = f.splitn(3, ':');
        let sev = parts.next().unwrap_or_default();
        let severity: Severity = serde_json::from_value(serde_json::Value::String(sev.trim().into()))
            .map_err(|_| Failure::usage(format!("severity {sev:?} is not minor, major or critical")))?;
        let category = parts
            .next()
            .filter(|c| !c.trim().is_empty())
            .ok_or_else(|| Failure::usage(format!("finding {f:?} is not severity:category[:note]")))?;
        findings.push(Finding {
            severity,
            category: category.trim().into(),
            note: parts.next().unwrap_or_default().trim().into(),
        });
    }
    Ok(ValidationOutcome {
        item_id: ItemId::new(item),
        reviewer: a.reviewer.as_deref().map_or_else(|| actor.clone(), PersonId::new),
        checklist_results,
        findings,
        review_minutes: a.minutes,
        first_pass_accept: a.first_pass,
        detected_in: a.detected_in,
    })
}

fn classify_cmd(ctx: &mut Ctx, a: &ClassifyArgs) -> CmdResult {
    let Some(item) = &a.item else {
        let s = match a.structuredness {
            Some(v) => v,
            None => ctx.prompt("Structuredness (low/med/high)")?,
        };
        let v = match a.verifiability {
            Some(v) => v,
            None => ctx.prompt("Verifiability (low/med/high)")?,
        };
        let c = match a.consequence {
            Some(v) => v,
            None => ctx.prompt("Consequence of error (low/med/high)")?,
        };
        let d = match a.capability {
            Some(v) => v,
            None => ctx.prompt("Demonstrated capability (unproven/emerging/established/mature)")?,
        };
        let preview = preview_classification(Assessment::new(s, v, c, d));
        ctx.emit(&preview, || {
            format!(
                "{} ({})\nmatched rule: {}\n{}{}",
                preview.classification.tier,
                preview.classification.tier.name(),
                preview.classification.matched_rule.rule(),
                preview.classification.rationale,
                if preview.requires_owner { "\nrequires a named owner" } else { "" }
            )
        })?;
        return Ok(EXIT_OK);
    };
    let actor = ctx.actor()?;
    let task_type = a
        .task_type
        .as_deref()
        .ok_or_else(|| Failure::usage("recording a classification needs --type"))?;
    let baseline = a.baseline.ok_or_else(|| Failure::usage("recording a classification needs --baseline"))?;
    let given = [a.structuredness.is_some(), a.verifiability.is_some(), a.consequence.is_some(), a.capability.is_some()];
    let assessment = match given {
        [true, true, true, true] => Some(Assessment::new(
            a.structuredness.unwrap(),
            a.verifiability.unwrap(),
            a.consequence.unwrap(),
            a.capability.unwrap(),
        )),
        [false, false, false, false] => None,
        _ => return Err(Failure::usage("give all four of --s --v --c --d, or none to use the task type's")),
    };
    let req = ClassifyItem {
        item_id: ItemId::new(item),
        title: a.title.clone().unwrap_or_else(|| item.clone()),
        task_type_id: TaskTypeId::new(task_type),
        sprint: a.sprint.as_deref().map(SprintId::new),
        assessment,
        tier: a.tier,
        override_rationale: a.rationale.clone(),
        owner: a.owner.as_deref().map(PersonId::new),
        baseline_effort: baseline,
    };
    write(ctx, |e, ts| e.classify_item(ts, &actor, req).map(|ev| vec![ev]))
}

fn retro(ctx: &mut Ctx, cycle: Option<u32>, close: bool) -> CmdResult {
    if close {
        if cycle.is_some() {
            return Err(Failure::usage("--close always closes the current cycle; drop --cycle"));
        }
        let actor = ctx.actor()?;
        let mut engine = ctx.engine(true)?;
        let closed = engine.close_cycle(ctx.now(), &actor)?;
        return ctx
            .emit(&closed, || {
                let mut s: String = closed.events.iter().map(|e| format!("{}\n", e.to_line())).collect();
                s.push_str(&render_retro(&closed.report));
                s
            })
            .map(|_| EXIT_OK);
    }
    let engine = ctx.engine(false)?;
    let report = engine.retro_report(cycle.unwrap_or(engine.snapshot().current_cycle))?;
    ctx.emit(&report, || render_retro(&report))?;
    Ok(EXIT_OK)
}

fn sim(ctx: &mut Ctx, config: &Path, sweep: bool, csv: bool, out: Option<&Path>) -> CmdResult {
    let src = std::fs::read_to_string(config).map_err(|e| Failure::io(format!("{}: {e}", config.display())))?;
    let text = if sweep {
        let s = SweepConfig::from_toml(&src).map_err(Failure::domain)?;
        let runs = run_sweep(&s).map_err(Failure::domain)?;
        if csv {
            sweep_csv(&runs)
        } else {
            serde_json::to_string_pretty(&runs).expect("sweep serializes")
        }
    } else {
        let c = SimConfig::from_toml(&src).map_err(Failure::domain)?;
        let r = run_simulation(&c).map_err(Failure::domain)?;
        if csv {
            r.to_csv()
        } else if ctx.cli.json || out.is_some() {
            r.to_json()
        } else {
            let s = &r.summary;
            format!(
                "seed {} over {} cycles\noutputs {}  errors {}  escaped {}  escaped defect rate {:.4}\npromotions {}  demotions {}",
                r.seed, s.cycles, s.total_outputs, s.total_errors, s.total_escaped, s.escaped_defect_rate, s.promotions, s.demotions
            )
        }
    };
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?,
        None => writeln!(ctx.out, "{}", text.trim_end()).map_err(Failure::io)?,
    }
    Ok(EXIT_OK)
}

fn inject(ctx: &mut Ctx, action: &InjectCmd) -> CmdResult {
    let actor = ctx.actor()?;
    match action {
        InjectCmd::Plant { campaign, errors } => {
            let mut planted = Vec::new();
            for e in errors {
                let mut p = e.splitn(3, ':');
                let (Some(item), Some(sev), Some(desc)) = (p.next(), p.next(), p.next()) else {
                    return Err(Failure::usage(format!("planted error {e:?} is not item:severity:description")));
                };
                let severity: Severity = serde_json::from_value(serde_json::Value::String(sev.trim().into()))
                    .map_err(|_| Failure::usage(format!("severity {sev:?} is not minor, major or critical")))?;
                planted.push(PlantedError {
                    item_id: ItemId::new(item.trim()),
                    known_error: desc.trim().into(),
                    severity,
                });
            }
            write(ctx, |e, ts| e.plant_injection(ts, &actor, CampaignId::new(campaign), planted).map(|ev| vec![ev]))
        }
        InjectCmd::Resolve { campaign } => {
            let mut engine = ctx.engine(true)?;
            let closed = engine.resolve_injection(ctx.now(), &actor, CampaignId::new(campaign))?;
            ctx.emit(&closed, || {
                let a = &closed.audit;
                let mut s = format!(
                    "{}\ncampaign {}: detected {}/{} ({:.0}%)\n",
                    closed.event.to_line(),
                    a.campaign_id,
                    a.detected,
                    a.planted,
                    a.detection_rate * 100.0
                );
                for m in &a.missed {
                    let _ = writeln!(s, "missed {} ({}): {}", m.item_id, m.severity, m.known_error);
                }
                s
            })?;
            Ok(EXIT_OK)
        }
    }
}

fn init(ctx: &mut Ctx, minimal: bool, dir: Option<&Path>) -> CmdResult {
    let (dir, config_path) = match dir {
        Some(d) => (d.to_path_buf(), d.join(DEFAULT_CONFIG_FILE)),
        None => {
            let p = ctx.cli.config.clone();
            (p.parent().map(Path::to_path_buf).unwrap_or_default(), p)
        }
    };
    if config_path.exists() {
        return Err(Failure::domain(format!("{} already exists", config_path.display())));
    }
    let io = |p: &Path, e: std::io::Error| Failure::io(format!("{}: {e}", p.display()));
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    }
    let mut config = EngineConfig {
        mode: if minimal { AdoptionMode::Minimal } else { AdoptionMode::Full },
        checklists: Some("checklists".into()),
        ..EngineConfig::default()
    };
    config.base_dir = dir.clone();

    let registry = config.registry_path();
    match FileStore::create(&registry) {
        Ok(_) => {}
        Err(StoreError::Io { path, source }) => return Err(Failure::io(format!("{path}: {source}"))),
        Err(e) => return Err(Failure::domain(e)),
    }
    let checklists = dir.join("checklists");
    std::fs::create_dir_all(&checklists).map_err(|e| io(&checklists, e))?;
    let mut written = vec![registry.clone()];
    for d in ChecklistDomain::ALL {
        let p = checklists.join(d.file_name());
        std::fs::write(&p, ChecklistTemplate::bundled_source(d)).map_err(|e| io(&p, e))?;
        written.push(p);
    }
    if !minimal {
        let p = dir.join("TIERS.md");
        std::fs::write(&p, tier_definitions(&config)).map_err(|e| io(&p, e))?;
        written.push(p);
    }
    std::fs::write(&config_path, config.to_toml()).map_err(|e| io(&config_path, e))?;
    written.push(config_path);
    let paths: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    ctx.emit(&paths, || paths.iter().map(|p| format!("created {p}\n")).collect())?;
    Ok(EXIT_OK)
}

/// The team's tier definitions document, generated from the active config.
pub fn tier_definitions(config: &EngineConfig) -> String {
    let p = &config.policy;
    let mut s = String::from("# Autonomy tiers\n\n");
    s.push_str("| Tier | Name | AI role | Validation | Planning |\n|---|---|---|---|---|\n");
    let rows = [
        ("AI-restricted", "AI-restricted", "None", "Human work only", "Standard human estimate"),
        ("1", "Assisted", "Supports human execution", "Inherent in human process", "Standard human estimate"),
        ("2", "Supervised", "Produces output; human reviews before delivery", "Full review with the domain checklist", "Specification + generation + validation"),
        ("3", "Autonomous-Monitored", "Produces output; post-hoc sampling", "Sampling plus automated checks", "Monitoring + sampling + exception handling"),
        ("4", "Autonomous-Bounded", "Independent within parameters", "Boundary monitoring and periodic audit", "Boundary maintenance + audit + exceptions"),
    ];
    for r in rows {
        let _ = writeln!(s, "| {} | {} | {} | {} | {} |", r.0, r.1, r.2, r.3, r.4);
    }
    s.push_str("\nTier 1 (pilot) is Tier 1 for an unproven AI capability: full human review while evidence accumulates.\n");
    let _ = writeln!(
        s,
        "New Tier 3 task types start sampling at {:.0}% of outputs.\n",
        config.sampling.initial_rate * 100.0
    );
    s.push_str("## Classification matrix\n\nColumns give the tier for low, medium and high consequence of error.\n\n");
    s.push_str("| Structuredness | Verifiability | Capability | Low | Medium | High |\n|---|---|---|---|---|---|\n");
    for r in EXPLICIT_ROWS {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            r.structuredness, r.verifiability, r.capability, r.tiers[0], r.tiers[1], r.tiers[2]
        );
    }
    s.push_str("| Low (either) | | any proven | Tier 1 | Tier 1 | AI-restricted |\n");
    s.push_str("| any | any | Unproven | Tier 1 (pilot) | Tier 1 (pilot) | AI-restricted |\n\n");
    s.push_str("Other combinations take the tier of the nearest row they dominate. Capability only rises with evidence gathered at lower tiers.\n\n");
    s.push_str("## Transitions\n\n");
    let _ = writeln!(
        s,
        "Promotion is one tier at a time, approved by the Hybrid Work Owner, after at least {} / {} / {} cycles (T1 to T2 / T2 to T3 / T3 to T4) with the error rate under threshold and no critical errors.",
        p.min_cycles_from(Tier::Tier1).unwrap_or_default(),
        p.min_cycles_from(Tier::Tier2).unwrap_or_default(),
        p.min_cycles_from(Tier::Tier3).unwrap_or_default(),
    );
    let _ = writeln!(
        s,
        "Demotion is immediate on a critical error, on {} consecutive cycles over threshold, or when any team member asks for it.",
        p.consecutive_breach_limit
    );
    s
}

fn render_plan(r: &PlanReport) -> String {
    let mut s = format!("sprint {}\n", r.sprint_id);
    for i in &r.items {
        let tier = i.tier.map_or("unclassified".to_string(), |t| t.to_string());
        let est = i.estimate.as_ref().map_or("-".to_string(), |e| {
            format!("{} pts (validation {:.2})", e.total, e.validation)
        });
        let _ = writeln!(s, "  {:<16} {:<16} baseline {:>5}  {est}", i.item_id, tier, i.baseline_effort);
    }
    let b = &r.budget;
    let _ = writeln!(
        s,
        "validation required {:.2} of {:.2} available: {}",
        b.required,
        b.available,
        if b.feasible { "feasible".to_string() } else { format!("INFEASIBLE, deficit {:.2}", b.deficit) }
    );
    for h in &b.adjustment_hint {
        let opts: Vec<String> = h
            .options
            .iter()
            .map(|o| serde_json::to_string(o).expect("serializes"))
            .collect();
        let _ = writeln!(s, "  adjust {} ({:.2} validation): {}", h.item_id, h.validation_points, opts.join(" or "));
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

fn render_promotion(r: &PromotionReport) -> String {
    let e = &r.eligibility;
    let target = e.proposed_tier.map_or("none".to_string(), |t| t.to_string());
    let mut s = format!(
        "{}: {} -> {}  {} (rating {}, matrix {})\n",
        r.task_type_id,
        e.current_tier,
        target,
        if e.eligible { "ELIGIBLE" } else { "blocked" },
        r.effective_rating,
        r.matrix_tier
    );
    for b in &e.blockers {
        let _ = writeln!(s, "  - {b}");
    }
    s
}

fn render_metrics(r: &crate::quality::CycleReport) -> String {
    match r.metrics() {
        None => "no outcomes recorded".into(),
        Some(m) => format!(
            "{} cycle {} at {}: validated {}, first-pass {}{}, error rate {}, critical {}, escapes {}",
            m.task_type_id,
            m.cycle,
            m.tier_during_cycle,
            m.outputs_validated,
            m.first_pass_accepted,
            m.first_pass_rate.map_or(String::new(), |r| format!(" ({:.0}%)", r * 100.0)),
            m.error_rate.map_or("-".to_string(), |r| format!("{:.0}%", r * 100.0)),
            m.critical_count,
            m.escapes
        ),
    }
}

fn render_retro(r: &RetroReport) -> String {
    let mut s = format!("retro for cycle {}{}\n", r.cycle, if r.closed { "" } else { " (open)" });
    for m in &r.metrics {
        let _ = writeln!(s, "  {}", render_metrics(m));
    }
    for p in &r.promotion {
        s.push_str(&render_promotion(p));
    }
    for e in r.erosion.iter().filter(|e| e.flagged) {
        let _ = writeln!(
            s,
            "erosion: {} has gone {} cycles without a human-only cycle",
            e.task_type_id, e.cycles_since_human_only
        );
    }
    for p in &r.demotion_prompts {
        let _ = writeln!(s, "demotion prompt: {}: {}", p.task_type_id, p.reason);
    }
    for v in &r.violations {
        let _ = writeln!(s, "violation: {}", v.description);
    }
    for f in &r.lint {
        let _ = writeln!(s, "lint: {f}");
    }
    for q in &r.questions {
        let _ = writeln!(s, "[ ] {q}");
    }
    s
}
