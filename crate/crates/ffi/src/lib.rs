//! C interface to the relmap engine.
//!
//! Every call returns a [`RelmapStatus`]. On failure the message is kept per
//! thread and can be read with [`relmap_last_error`]. Results come back as
//! JSON strings owned by the caller and released with [`relmap_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use relmap::cardinality::solution_space_size;
use relmap::model::{entities, DomainSide, Entity};
use relmap::relations::Snapshot;
use relmap::suggest::suggest;
use relmap::{Engine, Error, RunConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelmapStatus {
    Ok = 0,
    NoMapping = 1,
    InputError = 2,
    SourceError = 3,
    NullPointer = 4,
    InternalError = 5,
}

/// Opaque engine handle.
pub struct RelmapEngine {
    inner: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(RelmapStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::SourceUnavailable { .. } | Error::EmbeddingUnavailable { .. } => {
                RelmapStatus::SourceError
            }
            _ => RelmapStatus::InputError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RelmapStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic.
fn guard(f: impl FnOnce() -> Result<RelmapStatus, Failure>) -> RelmapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            set_error("");
            status
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RelmapStatus::InternalError
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RelmapStatus::InputError, format!("{what} is not UTF-8")))
}

unsafe fn str_array<'a>(p: *const *const c_char, len: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    (0..len).map(|i| str_arg(*p.add(i), what)).collect()
}

unsafe fn engine_arg<'a>(p: *const RelmapEngine) -> Result<&'a Engine, Failure> {
    p.as_ref().map(|e| &e.inner).ok_or_else(|| null("engine"))
}

unsafe fn write_json(out: *mut *mut c_char, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(internal)?;
    *out = CString::new(text).expect("JSON has no NUL").into_raw();
    Ok(())
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure(RelmapStatus::InternalError, e.to_string())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn relmap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn relmap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opens an offline engine over a snapshot file, or over a TOML run
/// configuration when the path ends in `.toml`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn relmap_engine_open(path: *const c_char, out: *mut *mut RelmapEngine) -> RelmapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = Path::new(str_arg(path, "path")?);
        let inner = if path.extension().is_some_and(|e| e == "toml") {
            let config = RunConfig::load(path)?;
            let dir = path.parent().unwrap_or(Path::new("."));
            let config = RunConfig {
                snapshot: config.snapshot.map(|s| dir.join(s)),
                ..config
            };
            Engine::from_config(&config, dir)?
        } else {
            Engine::from_snapshot(Snapshot::load(path)?)
        };
        *out = Box::into_raw(Box::new(RelmapEngine { inner }));
        Ok(RelmapStatus::Ok)
    })
}

/// Replaces the search hyperparameters. Values at or below zero keep the
/// current setting.
///
/// # Safety
/// `engine` must come from [`relmap_engine_open`].
#[no_mangle]
pub unsafe extern "C" fn relmap_engine_configure(
    engine: *mut RelmapEngine,
    beam_width: i32,
    top_k: i32,
    sim_threshold: f64,
    cluster_threshold: f64,
) -> RelmapStatus {
    guard(|| {
        let e = engine.as_mut().ok_or_else(|| null("engine"))?;
        let mut search = e.inner.search_config();
        if beam_width > 0 {
            search.beam_width = beam_width as usize;
        }
        if top_k > 0 {
            search.top_k_clusters = top_k as usize;
        }
        if sim_threshold > 0.0 {
            search.sim_threshold = sim_threshold;
        }
        if cluster_threshold > 0.0 {
            search.cluster_threshold = cluster_threshold;
        }
        e.inner = e.inner.with_search(search)?;
        Ok(RelmapStatus::Ok)
    })
}

/// Ranks mappings of `base` into `target`; writes the outcome as JSON.
/// Returns `NO_MAPPING` (with the JSON still written) when the best
/// mapping is empty.
///
/// # Safety
/// Arrays must hold `n_base` / `n_target` valid strings; `out_json` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn relmap_map(
    engine: *const RelmapEngine,
    base: *const *const c_char,
    n_base: usize,
    target: *const *const c_char,
    n_target: usize,
    out_json: *mut *mut c_char,
) -> RelmapStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let e = engine_arg(engine)?;
        let b = str_array(base, n_base, "base")?;
        let t = str_array(target, n_target, "target")?;
        let out = e.map_names(&b, &t)?;
        write_json(out_json, &out)?;
        Ok(if out.best().is_none_or(|m| m.is_empty()) {
            RelmapStatus::NoMapping
        } else {
            RelmapStatus::Ok
        })
    })
}

/// Writes the scoring breakdown of `(b1, b2)` against `(t1, t2)` as JSON.
///
/// # Safety
/// All strings must be valid; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmap_explain(
    engine: *const RelmapEngine,
    b1: *const c_char,
    b2: *const c_char,
    t1: *const c_char,
    t2: *const c_char,
    out_json: *mut *mut c_char,
) -> RelmapStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let e = engine_arg(engine)?;
        let x = e.explain(
            (str_arg(b1, "b1")?, str_arg(b2, "b2")?),
            (str_arg(t1, "t1")?, str_arg(t2, "t2")?),
        )?;
        write_json(out_json, &x)?;
        Ok(RelmapStatus::Ok)
    })
}

/// Maps the domains, then proposes target entities for the unmapped base
/// entity `entity`. Writes the suggestions as JSON; `NO_MAPPING` when
/// nothing survived.
///
/// # Safety
/// As for [`relmap_map`]; `entity` must be a valid string.
#[no_mangle]
pub unsafe extern "C" fn relmap_suggest(
    engine: *const RelmapEngine,
    base: *const *const c_char,
    n_base: usize,
    target: *const *const c_char,
    n_target: usize,
    entity: *const c_char,
    out_json: *mut *mut c_char,
) -> RelmapStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let e = engine_arg(engine)?;
        let b = entities(&str_array(base, n_base, "base")?, DomainSide::Base)?;
        let t = entities(&str_array(target, n_target, "target")?, DomainSide::Target)?;
        let slot = Entity::new(str_arg(entity, "entity")?, DomainSide::Base)?;
        let mapped = e.map(&b, &t)?;
        let Some(best) = mapped.best().filter(|m| !m.is_empty()) else {
            return Err(Failure(RelmapStatus::NoMapping, "no mapping to extend".into()));
        };
        let out = suggest(e, &slot, best, &b, &t)?;
        write_json(out_json, &out)?;
        Ok(if out.candidates.is_empty() {
            RelmapStatus::NoMapping
        } else {
            RelmapStatus::Ok
        })
    })
}

/// Number of valid mappings between domains of sizes `n` and `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmap_solution_space_size(n: usize, m: usize, out: *mut u64) -> RelmapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let size = solution_space_size(n, m)?;
        *out = u64::try_from(size)
            .map_err(|_| Failure(RelmapStatus::InputError, format!("size for n={n}, m={m} exceeds 64 bits")))?;
        Ok(RelmapStatus::Ok)
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn relmap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from [`relmap_engine_open`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn relmap_engine_free(engine: *mut RelmapEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}
