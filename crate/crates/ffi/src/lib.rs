//! C ABI for the tiergate engine.
//!
//! Engines are opaque handles. Every fallible call returns a [`TgStatus`];
//! on failure, [`tg_last_error`] gives the message for the calling thread.
//! Strings returned through `out` pointers are owned by the caller and must
//! be released with [`tg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tiergate::governance::{classify, Assessment, CapabilityRating, Level, Tier};
use tiergate::ids::{PersonId, TaskTypeId, Timestamp};
use tiergate::interface::{
    ClassifyItem, DemoteRequest, Engine, EngineConfig, EngineError, ErrorClass, PromoteRequest,
    RegisterTaskType,
};
use tiergate::planning::SprintPlan;
use tiergate::quality::ValidationOutcome;
use tiergate::simulator::{analytic_escape_rate, run_simulation, SimConfig};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    NotFound = 4,
    Conflict = 5,
    Forbidden = 6,
    Invalid = 7,
    Io = 8,
    UnknownOperation = 9,
    Panic = 10,
}

/// Ordinal level for structuredness, verifiability and consequence.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgLevel {
    Low = 0,
    Med = 1,
    High = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgCapability {
    Unproven = 0,
    Emerging = 1,
    Established = 2,
    Mature = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgTier {
    AiRestricted = 0,
    Tier1Pilot = 1,
    Tier1 = 2,
    Tier2 = 3,
    Tier3 = 4,
    Tier4 = 5,
}

impl From<Tier> for TgTier {
    fn from(t: Tier) -> Self {
        match t {
            Tier::AiRestricted => TgTier::AiRestricted,
            Tier::Tier1Pilot => TgTier::Tier1Pilot,
            Tier::Tier1 => TgTier::Tier1,
            Tier::Tier2 => TgTier::Tier2,
            Tier::Tier3 => TgTier::Tier3,
            Tier::Tier4 => TgTier::Tier4,
        }
    }
}

fn level(l: TgLevel) -> Level {
    match l {
        TgLevel::Low => Level::Low,
        TgLevel::Med => Level::Med,
        TgLevel::High => Level::High,
    }
}

fn capability(c: TgCapability) -> CapabilityRating {
    match c {
        TgCapability::Unproven => CapabilityRating::Unproven,
        TgCapability::Emerging => CapabilityRating::Emerging,
        TgCapability::Established => CapabilityRating::Established,
        TgCapability::Mature => CapabilityRating::Mature,
    }
}

/// Opaque engine handle.
pub struct TgEngine {
    inner: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(TgStatus, String);

impl From<EngineError> for Fail {
    fn from(e: EngineError) -> Self {
        let status = match e.class() {
            ErrorClass::NotFound => TgStatus::NotFound,
            ErrorClass::Conflict => TgStatus::Conflict,
            ErrorClass::Forbidden => TgStatus::Forbidden,
            ErrorClass::Invalid => TgStatus::Invalid,
            ErrorClass::Io => TgStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

/// Run `f`, converting failures and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(TgStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TgStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

fn parse<T: DeserializeOwned>(s: &str, what: &str) -> Result<T, Fail> {
    serde_json::from_str(s).map_err(|e| Fail(TgStatus::InvalidJson, format!("{what}: {e}")))
}

unsafe fn put_json<T: Serialize>(out: *mut *mut c_char, value: &T) -> Result<(), Fail> {
    let s = serde_json::to_string(value).map_err(|e| Fail(TgStatus::Invalid, e.to_string()))?;
    put_string(out, s)
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(TgStatus::NullArgument, "out is null".into()));
    }
    let c = CString::new(s).map_err(|_| Fail(TgStatus::Invalid, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn engine_mut<'a>(e: *mut TgEngine) -> Result<&'a mut Engine, Fail> {
    e.as_mut()
        .map(|h| &mut h.inner)
        .ok_or_else(|| Fail(TgStatus::NullArgument, "engine is null".into()))
}

fn store(out: *mut *mut TgEngine, engine: Engine) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(TgStatus::NullArgument, "out is null".into()));
    }
    // SAFETY: checked non-null; the caller provides a writable slot.
    unsafe { *out = Box::into_raw(Box::new(TgEngine { inner: engine })) };
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer returned through an `out` parameter of this
/// library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn tg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Classify an assessment with the decision matrix.
///
/// # Safety
/// `out_tier` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_classify(
    structuredness: TgLevel,
    verifiability: TgLevel,
    consequence: TgLevel,
    capability_rating: TgCapability,
    out_tier: *mut TgTier,
) -> TgStatus {
    guard(|| {
        if out_tier.is_null() {
            return Err(Fail(TgStatus::NullArgument, "out_tier is null".into()));
        }
        let a = Assessment::new(
            level(structuredness),
            level(verifiability),
            level(consequence),
            capability(capability_rating),
        );
        *out_tier = classify(&a).tier.into();
        Ok(())
    })
}

/// Probability an erroneous output escapes both sampling and integration.
/// All inputs must be probabilities in [0, 1].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_analytic_escape_rate(
    error_rate: f64,
    sampling_rate: f64,
    detection: f64,
    integration_catch: f64,
    out: *mut f64,
) -> TgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail(TgStatus::NullArgument, "out is null".into()));
        }
        *out = analytic_escape_rate(error_rate, sampling_rate, detection, integration_catch)
            .map_err(|e| Fail(TgStatus::Invalid, e.to_string()))?;
        Ok(())
    })
}

/// Open the registry named by a config file as its single writer.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_engine_open(config_path: *const c_char, out: *mut *mut TgEngine) -> TgStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        store(out, Engine::load(Path::new(path), true)?)
    })
}

/// An engine over an in-memory registry. `config_toml` may be NULL for the
/// default configuration.
///
/// # Safety
/// `config_toml` must be NULL or NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_engine_new_in_memory(config_toml: *const c_char, out: *mut *mut TgEngine) -> TgStatus {
    guard(|| {
        let config = match opt_str_arg(config_toml, "config_toml")? {
            Some(src) => EngineConfig::from_toml(src, Path::new("")).map_err(|e| Fail(TgStatus::Invalid, e.to_string()))?,
            None => EngineConfig::default(),
        };
        store(out, Engine::in_memory(config)?)
    })
}

/// Release an engine and its registry lock.
///
/// # Safety
/// `engine` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn tg_engine_free(engine: *mut TgEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Id of the last appended event.
///
/// # Safety
/// `engine` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_engine_last_event_id(engine: *mut TgEngine, out: *mut u64) -> TgStatus {
    guard(|| {
        let e = engine_mut(engine)?;
        if out.is_null() {
            return Err(Fail(TgStatus::NullArgument, "out is null".into()));
        }
        *out = e.snapshot().last_event_id;
        Ok(())
    })
}

/// Run one engine operation with a JSON request and receive a JSON reply.
///
/// Write operations need `actor`; `timestamp` (RFC 3339) may be NULL for
/// the current time. `target` names the task type for `demote`, `promote`
/// and `promotion_check`, and may be NULL otherwise.
///
/// | op | request | reply |
/// |---|---|---|
/// | `register_task_type` | RegisterTaskType | event |
/// | `classify_item` | ClassifyItem | event |
/// | `record_outcome` | ValidationOutcome | events |
/// | `demote` | DemoteRequest | event |
/// | `promote` | PromoteRequest | event |
/// | `promotion_check` | `{"capacity_ok": bool}` or NULL | reports |
/// | `close_cycle` | NULL | events and retro report |
/// | `plan` | SprintPlan | plan report |
/// | `lint` | SprintPlan or NULL | findings |
/// | `erosion` | NULL | erosion status |
/// | `snapshot` | NULL | registry snapshot |
///
/// # Safety
/// `engine` must be a live handle; string arguments NULL or NUL-terminated;
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_engine_call(
    engine: *mut TgEngine,
    op: *const c_char,
    actor: *const c_char,
    timestamp: *const c_char,
    target: *const c_char,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> TgStatus {
    guard(|| {
        let e = engine_mut(engine)?;
        let op = str_arg(op, "op")?;
        let body = opt_str_arg(request_json, "request_json")?;
        let target = opt_str_arg(target, "target")?.map(TaskTypeId::new);
        let actor = || -> Result<PersonId, Fail> { Ok(PersonId::new(str_arg(actor, "actor")?)) };
        let ts = || -> Result<Timestamp, Fail> {
            match opt_str_arg(timestamp, "timestamp")? {
                Some(t) => parse(&serde_json::to_string(t).expect("string serializes"), "timestamp"),
                None => Ok(Timestamp::from(std::time::SystemTime::now())),
            }
        };
        let need_body = || body.ok_or_else(|| Fail(TgStatus::NullArgument, format!("{op} needs a request body")));
        let need_target = || target.clone().ok_or_else(|| Fail(TgStatus::NullArgument, format!("{op} needs a target task type")));
        match op {
            "register_task_type" => {
                let req: RegisterTaskType = parse(need_body()?, op)?;
                put_json(out_json, &e.register_task_type(ts()?, &actor()?, req)?)
            }
            "classify_item" => {
                let req: ClassifyItem = parse(need_body()?, op)?;
                put_json(out_json, &e.classify_item(ts()?, &actor()?, req)?)
            }
            "record_outcome" => {
                let o: ValidationOutcome = parse(need_body()?, op)?;
                put_json(out_json, &e.record_outcome(ts()?, &actor()?, o)?)
            }
            "demote" => {
                let req: DemoteRequest = parse(need_body()?, op)?;
                put_json(out_json, &e.demote(ts()?, &actor()?, &need_target()?, req)?)
            }
            "promote" => {
                let req: PromoteRequest = parse(need_body()?, op)?;
                put_json(out_json, &e.promote(ts()?, &actor()?, &need_target()?, req)?)
            }
            "promotion_check" => {
                #[derive(serde::Deserialize)]
                struct Q {
                    #[serde(default)]
                    capacity_ok: bool,
                }
                let q: Q = body.map_or(Ok(Q { capacity_ok: false }), |b| parse(b, op))?;
                put_json(out_json, &e.promotion_check(target.as_ref(), q.capacity_ok)?)
            }
            "close_cycle" => put_json(out_json, &e.close_cycle(ts()?, &actor()?)?),
            "plan" => {
                let p = SprintPlan::from_json(need_body()?).map_err(|err| Fail(TgStatus::InvalidJson, err.to_string()))?;
                put_json(out_json, &e.plan(p)?)
            }
            "lint" => {
                let p = body
                    .map(SprintPlan::from_json)
                    .transpose()
                    .map_err(|err| Fail(TgStatus::InvalidJson, err.to_string()))?;
                put_json(out_json, &e.lint(p)?)
            }
            "erosion" => put_json(out_json, &e.erosion()),
            "snapshot" => put_json(out_json, e.snapshot()),
            other => Err(Fail(TgStatus::UnknownOperation, format!("unknown operation {other:?}"))),
        }
    })
}

/// Run a simulation from a JSON config; the reply is the full result.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_simulate(config_json: *const c_char, out_json: *mut *mut c_char) -> TgStatus {
    guard(|| {
        let cfg: SimConfig = parse(str_arg(config_json, "config_json")?, "simulation config")?;
        let result = run_simulation(&cfg).map_err(|e| Fail(TgStatus::Invalid, e.to_string()))?;
        put_string(out_json, result.to_json())
    })
}
