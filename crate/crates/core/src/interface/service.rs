//! HTTP+JSON service under `/v1`.
//!
//! Every request names the acting member in `X-Team-Member`; writes may pin
//! the event timestamp with `X-Event-Time` (RFC 3339). All writes go through
//! one engine behind a write lock; reads share it. Every response carries
//! `X-Schema-Version`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Mutex, RwLock};

use super::engine::*;
use crate::governance::{Assessment, DemotionTrigger};
use crate::ids::{CampaignId, ItemId, PersonId, SessionId, TaskTypeId, Timestamp};
use crate::planning::{BacklogItem, ItemStatus, SprintPlan};
use crate::quality::{PlantedError, ValidationOutcome};
use crate::registry::events::{
    DeficienciesSettled, ProvenanceRecord, RegistryEvent, SessionAction, Settlement, ViolationNoted,
    LOG_SCHEMA_VERSION,
};
use crate::registry::export::Entity;
use crate::registry::snapshot::SchemaError;
use crate::registry::{QueryFilter, RegistryError};
use crate::simulator::{run_simulation, SimConfig, SimResult};

pub const MEMBER_HEADER: &str = "x-team-member";
pub const EVENT_TIME_HEADER: &str = "x-event-time";
pub const SCHEMA_HEADER: &str = "x-schema-version";

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SimJob {
    Running,
    Done { result: Box<SimResult> },
    Failed { error: String },
}

pub struct AppState {
    engine: RwLock<Engine>,
    last_event: watch::Sender<u64>,
    poll_timeout: Duration,
    jobs: Mutex<BTreeMap<u64, SimJob>>,
    next_job: AtomicU64,
}

type Shared = Arc<AppState>;

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    kind: &'static str,
}

pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(m: impl Into<String>) -> Self {
        Self(StatusCode::BAD_REQUEST, m.into())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e.class() {
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Conflict => StatusCode::CONFLICT,
            ErrorClass::Forbidden => StatusCode::FORBIDDEN,
            ErrorClass::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self(status, e.to_string())
    }
}

impl From<SchemaError> for ApiError {
    fn from(e: SchemaError) -> Self {
        EngineError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let kind = match self.0 {
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            StatusCode::FORBIDDEN => "forbidden",
            StatusCode::UNAUTHORIZED => "unauthorized",
            StatusCode::BAD_REQUEST => "bad_request",
            StatusCode::UNPROCESSABLE_ENTITY => "invalid",
            _ => "internal",
        };
        (self.0, Json(ErrorBody { error: self.1, kind })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// The acting member, checked against the roster.
struct Member(PersonId);

fn member(engine: &Engine, headers: &HeaderMap) -> Result<Member, ApiError> {
    let name = headers
        .get(MEMBER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ApiError(StatusCode::UNAUTHORIZED, format!("missing {MEMBER_HEADER} header")))?;
    let p = PersonId::new(name);
    if !engine.config().is_member(&p) {
        return Err(ApiError(StatusCode::FORBIDDEN, format!("{p} is not on the team roster")));
    }
    Ok(Member(p))
}

fn event_time(headers: &HeaderMap) -> Result<Timestamp, ApiError> {
    match headers.get(EVENT_TIME_HEADER) {
        None => Ok(chrono::Utc::now()),
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| chrono::DateTime::parse_from_rfc3339(s).ok())
            .map(|t| t.with_timezone(&chrono::Utc))
            .ok_or_else(|| ApiError::bad_request(format!("{EVENT_TIME_HEADER} is not RFC 3339"))),
    }
}

/// Run a read against the engine.
async fn read<T>(state: &Shared, headers: &HeaderMap, f: impl FnOnce(&Engine) -> Result<T, ApiError>) -> ApiResult<T> {
    let engine = state.engine.read().await;
    member(&engine, headers)?;
    f(&engine).map(Json)
}

/// Run a write as the acting member and publish the new last event id.
async fn write<T>(
    state: &Shared,
    headers: &HeaderMap,
    f: impl FnOnce(&mut Engine, Timestamp, &PersonId) -> Result<T, ApiError>,
) -> ApiResult<T> {
    let ts = event_time(headers)?;
    let mut engine = state.engine.write().await;
    let Member(actor) = member(&engine, headers)?;
    let out = f(&mut engine, ts, &actor);
    let last = engine.snapshot().last_event_id;
    drop(engine);
    state.last_event.send_if_modified(|v| {
        let changed = *v != last;
        *v = last;
        changed
    });
    out.map(Json)
}

fn json_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

async fn schema_header(req: Request, next: Next) -> Response {
    let mut resp = next.run(req).await;
    resp.headers_mut()
        .insert(SCHEMA_HEADER, HeaderValue::from(LOG_SCHEMA_VERSION));
    resp
}

pub fn router(engine: Engine) -> Router {
    let last = engine.snapshot().last_event_id;
    let poll_timeout = Duration::from_millis(engine.config().service.long_poll_timeout_ms);
    let (tx, _) = watch::channel(last);
    let state = Arc::new(AppState {
        engine: RwLock::new(engine),
        last_event: tx,
        poll_timeout,
        jobs: Mutex::new(BTreeMap::new()),
        next_job: AtomicU64::new(1),
    });
    let v1 = Router::new()
        .route("/health", get(health))
        .route("/snapshot", get(snapshot))
        .route("/events", get(events))
        .route("/task-types", get(list_task_types).post(register_task_type))
        .route("/task-types/:id", get(task_type))
        .route("/task-types/:id/eligibility", get(eligibility))
        .route("/task-types/:id/demote", post(demote))
        .route("/task-types/:id/promote", post(promote))
        .route("/task-types/:id/downgrade", post(downgrade))
        .route("/task-types/:id/sampling", post(sampling))
        .route("/task-types/:id/human-only", post(schedule_human_only))
        .route("/task-types/:id/human-only/complete", post(complete_human_only))
        .route("/eligibility", get(all_eligibility))
        .route("/classify", post(classify_preview))
        .route("/items", get(list_items).post(classify_item))
        .route("/items/:id", get(item))
        .route("/items/:id/owner", put(assign_owner))
        .route("/items/:id/status", put(set_status))
        .route("/items/:id/provenance", post(provenance))
        .route("/items/:id/integration", post(integration))
        .route("/items/:id/settlement", post(settlement))
        .route("/items/:id/dod", get(dod))
        .route("/outcomes", get(list_outcomes).post(record_outcome))
        .route("/transitions", get(list_transitions))
        .route("/violations", post(violation))
        .route("/board", get(board))
        .route("/plans", post(plan))
        .route("/estimate", post(estimate))
        .route("/lint", get(lint_registry).post(lint_plan))
        .route("/erosion", get(erosion))
        .route("/metrics/:task_type", get(metrics))
        .route("/retro", get(retro))
        .route("/retro/close", post(close_cycle))
        .route("/scaling", get(scaling))
        .route("/sessions/:id", get(session).post(session_action))
        .route("/campaigns/:id/plant", post(plant))
        .route("/campaigns/:id/resolve", post(resolve))
        .route("/sim", post(start_sim))
        .route("/sim/:job", get(sim_job))
        .route("/query", get(query))
        .route("/export/:entity", get(export));
    Router::new()
        .nest("/v1", v1)
        .layer(middleware::from_fn(schema_header))
        .with_state(state)
}

/// Serve until interrupted.
pub async fn serve(engine: Engine, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub fn serve_blocking(engine: Engine, bind: &str) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(engine, bind))
}

// Handlers

#[derive(Serialize)]
struct Health {
    schema_version: u32,
    last_event_id: u64,
    current_cycle: u32,
}

async fn health(State(s): State<Shared>) -> Json<Health> {
    let e = s.engine.read().await;
    Json(Health {
        schema_version: LOG_SCHEMA_VERSION,
        last_event_id: e.snapshot().last_event_id,
        current_cycle: e.snapshot().current_cycle,
    })
}

async fn snapshot(State(s): State<Shared>, h: HeaderMap) -> Response {
    match read(&s, &h, |e| Ok(serde_json::to_value(e.snapshot()).expect("snapshot serializes"))).await {
        Ok(v) => v.into_response(),
        Err(e) => e.into_response(),
    }
}

#[derive(Deserialize)]
struct EventsParams {
    #[serde(default)]
    after: u64,
    timeout_ms: Option<u64>,
}

/// Events after `after`; waits up to the timeout when there are none yet.
async fn events(State(s): State<Shared>, h: HeaderMap, Query(p): Query<EventsParams>) -> ApiResult<Vec<RegistryEvent>> {
    let mut rx = s.last_event.subscribe();
    {
        let engine = s.engine.read().await;
        member(&engine, &h)?;
        let ev = engine.events_after(p.after);
        if !ev.is_empty() || p.timeout_ms == Some(0) {
            return Ok(Json(ev.to_vec()));
        }
    }
    let wait = p.timeout_ms.map_or(s.poll_timeout, |ms| Duration::from_millis(ms).min(s.poll_timeout));
    let _ = tokio::time::timeout(wait, rx.wait_for(|last| *last > p.after)).await;
    let engine = s.engine.read().await;
    Ok(Json(engine.events_after(p.after).to_vec()))
}

async fn list_task_types(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Vec<crate::registry::TaskTypeRecord>> {
    read(&s, &h, |e| Ok(e.snapshot().task_types.values().cloned().collect())).await
}

async fn task_type(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>) -> ApiResult<crate::registry::TaskTypeRecord> {
    read(&s, &h, |e| Ok(e.snapshot().task_type(&TaskTypeId::new(id))?.clone())).await
}

async fn register_task_type(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<RegistryEvent> {
    let req: RegisterTaskType = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.register_task_type(ts, a, req)?)).await
}

#[derive(Deserialize)]
struct CapacityParam {
    #[serde(default)]
    capacity_ok: bool,
}

async fn eligibility(
    State(s): State<Shared>,
    h: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<CapacityParam>,
) -> ApiResult<PromotionReport> {
    read(&s, &h, |e| Ok(e.promotion_report(&TaskTypeId::new(id), q.capacity_ok)?)).await
}

async fn all_eligibility(State(s): State<Shared>, h: HeaderMap, Query(q): Query<CapacityParam>) -> ApiResult<Vec<PromotionReport>> {
    read(&s, &h, |e| Ok(e.promotion_check(None, q.capacity_ok)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DemoteBody {
    #[serde(default)]
    trigger: Option<DemotionTrigger>,
    rationale: String,
}

async fn demote(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: DemoteBody = json_body(&body)?;
    let req = DemoteRequest {
        trigger: b.trigger.unwrap_or(DemotionTrigger::MemberRequest),
        rationale: b.rationale,
    };
    write(&s, &h, |e, ts, a| Ok(e.demote(ts, a, &TaskTypeId::new(id), req)?)).await
}

async fn promote(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let req: PromoteRequest = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.promote(ts, a, &TaskTypeId::new(id), req)?)).await
}

async fn downgrade(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let req: DowngradeRequest = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.downgrade_rating(ts, a, &TaskTypeId::new(id), req)?)).await
}

async fn sampling(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let req: SqcRateRequest = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.set_sqc_sampling_rate(ts, a, &TaskTypeId::new(id), req)?)).await
}

async fn schedule_human_only(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let req: ScheduleHumanOnly = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.schedule_human_only(ts, a, &TaskTypeId::new(id), req)?)).await
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CompleteBody {
    #[serde(default)]
    item_id: Option<ItemId>,
}

async fn complete_human_only(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: CompleteBody = if body.is_empty() { CompleteBody::default() } else { json_body(&body)? };
    write(&s, &h, |e, ts, a| Ok(e.complete_human_only(ts, a, &TaskTypeId::new(id), b.item_id)?)).await
}

async fn classify_preview(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<ClassificationPreview> {
    let a: Assessment = json_body(&body)?;
    read(&s, &h, |_| Ok(preview_classification(a))).await
}

async fn list_items(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Vec<crate::registry::snapshot::ItemRecord>> {
    read(&s, &h, |e| Ok(e.snapshot().items.values().cloned().collect())).await
}

async fn item(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>) -> ApiResult<crate::registry::snapshot::ItemRecord> {
    read(&s, &h, |e| Ok(e.snapshot().item(&ItemId::new(id))?.clone())).await
}

async fn classify_item(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<RegistryEvent> {
    let req: ClassifyItem = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.classify_item(ts, a, req)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OwnerBody {
    owner: PersonId,
}

async fn assign_owner(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: OwnerBody = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.assign_owner(ts, a, ItemId::new(id), b.owner)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatusBody {
    status: ItemStatus,
}

async fn set_status(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: StatusBody = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.set_status(ts, a, ItemId::new(id), b.status)?)).await
}

fn same_item(path: &str, body: &ItemId) -> Result<(), ApiError> {
    if body.as_str() == path {
        Ok(())
    } else {
        Err(ApiError::bad_request(format!("body item {body} does not match path item {path}")))
    }
}

async fn provenance(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let p: ProvenanceRecord = json_body(&body)?;
    same_item(&id, &p.item_id)?;
    write(&s, &h, |e, ts, a| Ok(e.record_provenance(ts, a, p)?)).await
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct NoteBody {
    #[serde(default)]
    note: String,
}

async fn integration(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: NoteBody = if body.is_empty() { NoteBody::default() } else { json_body(&body)? };
    write(&s, &h, |e, ts, a| Ok(e.verify_integration(ts, a, ItemId::new(id), b.note)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SettleBody {
    resolution: Settlement,
    #[serde(default)]
    note: String,
}

async fn settlement(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: SettleBody = json_body(&body)?;
    let d = DeficienciesSettled {
        item_id: ItemId::new(id),
        resolution: b.resolution,
        note: b.note,
    };
    write(&s, &h, |e, ts, a| Ok(e.settle_deficiencies(ts, a, d)?)).await
}

async fn dod(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>) -> ApiResult<crate::planning::DoDState> {
    read(&s, &h, |e| Ok(e.dod(&ItemId::new(id))?)).await
}

async fn list_outcomes(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Vec<crate::registry::snapshot::RecordedOutcome>> {
    read(&s, &h, |e| Ok(e.snapshot().outcomes.clone())).await
}

async fn record_outcome(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<Vec<RegistryEvent>> {
    let o: ValidationOutcome = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.record_outcome(ts, a, o)?)).await
}

async fn list_transitions(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Vec<crate::governance::TransitionEvent>> {
    read(&s, &h, |e| Ok(e.snapshot().transitions.clone())).await
}

async fn violation(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<RegistryEvent> {
    let v: ViolationNoted = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.note_violation(ts, a, v)?)).await
}

#[derive(Serialize)]
struct Board {
    current_cycle: u32,
    items: Vec<crate::registry::snapshot::ItemRecord>,
    board: crate::registry::snapshot::BoardMetadata,
}

async fn board(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Board> {
    read(&s, &h, |e| {
        let snap = e.snapshot();
        Ok(Board {
            current_cycle: snap.current_cycle,
            items: snap.items.values().cloned().collect(),
            board: snap.board.clone(),
        })
    })
    .await
}

async fn plan(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<PlanReport> {
    let p: SprintPlan = SprintPlan::from_json(std::str::from_utf8(&body).map_err(|e| ApiError::bad_request(e.to_string()))?)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    read(&s, &h, |e| Ok(e.plan(p)?)).await
}

async fn estimate(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<crate::planning::EffortBreakdown> {
    let item: BacklogItem = json_body(&body)?;
    read(&s, &h, |e| Ok(e.estimate_item(&item)?)).await
}

async fn lint_registry(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Vec<crate::quality::LintFinding>> {
    read(&s, &h, |e| Ok(e.lint(None)?)).await
}

async fn lint_plan(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> ApiResult<Vec<crate::quality::LintFinding>> {
    let p = if body.is_empty() {
        None
    } else {
        Some(
            SprintPlan::from_json(std::str::from_utf8(&body).map_err(|e| ApiError::bad_request(e.to_string()))?)
                .map_err(|e| ApiError::bad_request(e.to_string()))?,
        )
    };
    read(&s, &h, |e| Ok(e.lint(p)?)).await
}

async fn erosion(State(s): State<Shared>, h: HeaderMap) -> ApiResult<Vec<crate::quality::ErosionStatus>> {
    read(&s, &h, |e| Ok(e.erosion())).await
}

#[derive(Deserialize)]
struct CycleParam {
    cycle: Option<u32>,
}

async fn metrics(
    State(s): State<Shared>,
    h: HeaderMap,
    Path(tt): Path<String>,
    Query(q): Query<CycleParam>,
) -> ApiResult<crate::quality::CycleReport> {
    read(&s, &h, |e| {
        let cycle = q.cycle.unwrap_or(e.snapshot().current_cycle);
        Ok(e.cycle_metrics(&TaskTypeId::new(tt), cycle)?)
    })
    .await
}

async fn retro(State(s): State<Shared>, h: HeaderMap, Query(q): Query<CycleParam>) -> ApiResult<RetroReport> {
    read(&s, &h, |e| Ok(e.retro_report(q.cycle.unwrap_or(e.snapshot().current_cycle))?)).await
}

async fn close_cycle(State(s): State<Shared>, h: HeaderMap) -> ApiResult<RetroClose> {
    write(&s, &h, |e, ts, a| Ok(e.close_cycle(ts, a)?)).await
}

async fn scaling(State(s): State<Shared>, h: HeaderMap) -> ApiResult<crate::planning::ScalingProfile> {
    read(&s, &h, |e| Ok(e.scaling())).await
}

async fn session(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>) -> Response {
    let r = read(&s, &h, |e| {
        let id = SessionId::new(id);
        e.snapshot()
            .sessions
            .get(&id)
            .map(|s| serde_json::to_value(s).expect("session serializes"))
            .ok_or_else(|| SchemaError::UnknownSession(id).into())
    })
    .await;
    match r {
        Ok(v) => v.into_response(),
        Err(e) => e.into_response(),
    }
}

async fn session_action(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let action: SessionAction = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.session(ts, a, SessionId::new(id), action)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantBody {
    planted: Vec<PlantedError>,
}

async fn plant(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<RegistryEvent> {
    let b: PlantBody = json_body(&body)?;
    write(&s, &h, |e, ts, a| Ok(e.plant_injection(ts, a, CampaignId::new(id), b.planted)?)).await
}

async fn resolve(State(s): State<Shared>, h: HeaderMap, Path(id): Path<String>) -> ApiResult<CampaignClose> {
    write(&s, &h, |e, ts, a| Ok(e.resolve_injection(ts, a, CampaignId::new(id))?)).await
}

#[derive(Serialize)]
struct JobCreated {
    job_id: u64,
}

async fn start_sim(State(s): State<Shared>, h: HeaderMap, body: Bytes) -> Result<(StatusCode, Json<JobCreated>), ApiError> {
    {
        let engine = s.engine.read().await;
        member(&engine, &h)?;
    }
    let cfg: SimConfig = json_body(&body)?;
    cfg.validate().map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let job_id = s.next_job.fetch_add(1, Ordering::Relaxed);
    s.jobs.lock().await.insert(job_id, SimJob::Running);
    let state = s.clone();
    tokio::spawn(async move {
        let outcome = tokio::task::spawn_blocking(move || run_simulation(&cfg)).await;
        let job = match outcome {
            Ok(Ok(result)) => SimJob::Done { result: Box::new(result) },
            Ok(Err(e)) => SimJob::Failed { error: e.to_string() },
            Err(e) => SimJob::Failed { error: e.to_string() },
        };
        state.jobs.lock().await.insert(job_id, job);
    });
    Ok((StatusCode::ACCEPTED, Json(JobCreated { job_id })))
}

async fn sim_job(State(s): State<Shared>, h: HeaderMap, Path(job): Path<u64>) -> ApiResult<SimJob> {
    {
        let engine = s.engine.read().await;
        member(&engine, &h)?;
    }
    s.jobs
        .lock()
        .await
        .get(&job)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no simulation job {job}")))
}

async fn query(State(s): State<Shared>, h: HeaderMap, Query(q): Query<BTreeMap<String, String>>) -> ApiResult<crate::registry::QueryResult> {
    let mut filter = QueryFilter::default();
    for (k, v) in &q {
        filter.set(k, v).map_err(|e| ApiError::bad_request(e.to_string()))?;
    }
    read(&s, &h, |e| Ok(e.query(&filter))).await
}

async fn export(State(s): State<Shared>, h: HeaderMap, Path(entity): Path<String>) -> Response {
    let entity: Entity = match entity.parse() {
        Ok(e) => e,
        Err(m) => return ApiError(StatusCode::NOT_FOUND, m).into_response(),
    };
    match read(&s, &h, |e| Ok(e.export(entity))).await {
        Ok(Json(csv)) => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Why the service refused to start on a damaged registry.
pub fn startup_error(e: &EngineError) -> String {
    match e {
        EngineError::Registry(r @ RegistryError::Corrupt(_)) => match r.corrupt_event_id() {
            Some(id) => format!("registry is corrupt at event {id}: {r}"),
            None => format!("registry is corrupt: {r}"),
        },
        other => other.to_string(),
    }
}
