//! C ABI over the simulator: load a scenario from JSON, run it, read
//! metrics and the event log, and audit a log.
//!
//! Every function returns a [`VesonetStatus`]. On failure a description is
//! kept per thread and can be read with [`vesonet_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use vesonet::audit;
use vesonet::sim::{run_scenario, write_events, Policy, RunOutput, Scenario, SimError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesonetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidScenario = 3,
    Runtime = 4,
    Io = 5,
    /// The metric exists but has no value for this run.
    NotAvailable = 6,
    UnknownMetric = 7,
    BufferTooSmall = 8,
    AuditFailed = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesonetPolicy {
    Vesonet = 0,
    BaselineNoReroute = 1,
}

/// A validated scenario.
pub struct VesonetScenario {
    inner: Scenario,
}

/// The result of one simulation run.
pub struct VesonetRun {
    out: RunOutput,
    csv: Vec<u8>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: VesonetStatus, msg: impl AsRef<str>) -> VesonetStatus {
    set_error(msg.as_ref());
    status
}

fn guard(f: impl FnOnce() -> VesonetStatus) -> VesonetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == VesonetStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(VesonetStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, VesonetStatus> {
    if p.is_null() {
        return Err(fail(VesonetStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(VesonetStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn vesonet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vesonet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scenario JSON document. Relative file paths in the
/// document are resolved against `base_dir` when it is not null.
///
/// # Safety
/// `json` and `base_dir` must be null or NUL-terminated strings; `out` must
/// be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn vesonet_scenario_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut VesonetScenario,
) -> VesonetStatus {
    guard(|| {
        if out.is_null() {
            return fail(VesonetStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let json = match text(json, "json") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let mut sc = match Scenario::from_json(json) {
            Ok(sc) => sc,
            Err(p) => {
                return fail(
                    VesonetStatus::InvalidScenario,
                    format!("{}:{}: {}", p.line, p.column, p.message),
                )
            }
        };
        if !base_dir.is_null() {
            match text(base_dir, "base_dir") {
                Ok(b) => sc.resolve_paths(std::path::Path::new(b)),
                Err(s) => return s,
            }
        }
        let errs = sc.validate();
        if !errs.is_empty() {
            return fail(VesonetStatus::InvalidScenario, errs.join("; "));
        }
        *out = Box::into_raw(Box::new(VesonetScenario { inner: sc }));
        VesonetStatus::Ok
    })
}

/// # Safety
/// `sc` must be null or a handle from [`vesonet_scenario_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vesonet_scenario_free(sc: *mut VesonetScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn vesonet_scenario_set_seed(sc: *mut VesonetScenario, seed: u64) -> VesonetStatus {
    match sc.as_mut() {
        Some(s) => {
            s.inner.rng_seed = seed;
            VesonetStatus::Ok
        }
        None => fail(VesonetStatus::NullPointer, "scenario is null"),
    }
}

/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn vesonet_scenario_set_policy(sc: *mut VesonetScenario, policy: VesonetPolicy) -> VesonetStatus {
    match sc.as_mut() {
        Some(s) => {
            s.inner.policy = match policy {
                VesonetPolicy::Vesonet => Policy::Vesonet,
                VesonetPolicy::BaselineNoReroute => Policy::BaselineNoReroute,
            };
            VesonetStatus::Ok
        }
        None => fail(VesonetStatus::NullPointer, "scenario is null"),
    }
}

/// Runs the scenario to completion.
///
/// # Safety
/// `sc` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vesonet_run(sc: *const VesonetScenario, out: *mut *mut VesonetRun) -> VesonetStatus {
    guard(|| {
        if out.is_null() {
            return fail(VesonetStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(sc) = sc.as_ref() else {
            return fail(VesonetStatus::NullPointer, "scenario is null");
        };
        let result = match run_scenario(&sc.inner) {
            Ok(r) => r,
            Err(e @ SimError::Invalid(_)) => return fail(VesonetStatus::InvalidScenario, e.to_string()),
            Err(e @ SimError::Io(_)) => return fail(VesonetStatus::Io, e.to_string()),
            Err(e) => return fail(VesonetStatus::Runtime, e.to_string()),
        };
        let mut csv = Vec::new();
        if let Err(e) = write_events(&result.events, &mut csv) {
            return fail(VesonetStatus::Io, e.to_string());
        }
        *out = Box::into_raw(Box::new(VesonetRun { out: result, csv }));
        VesonetStatus::Ok
    })
}

/// # Safety
/// `run` must be null or a handle from [`vesonet_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vesonet_run_free(run: *mut VesonetRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Reads one metric by its `metrics.csv` name, e.g. `delivery_rate`.
///
/// # Safety
/// `run` must be a live run handle, `name` a NUL-terminated string and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vesonet_run_metric(
    run: *const VesonetRun,
    name: *const c_char,
    value: *mut f64,
) -> VesonetStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), value.is_null()) else {
            return fail(VesonetStatus::NullPointer, "run or value is null");
        };
        let name = match text(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match run.out.metrics.rows().into_iter().find(|(n, _)| *n == name) {
            Some((_, Some(v))) => {
                *value = v;
                VesonetStatus::Ok
            }
            Some((_, None)) => fail(VesonetStatus::NotAvailable, format!("{name} has no value for this run")),
            None => fail(VesonetStatus::UnknownMetric, format!("unknown metric {name}")),
        }
    })
}

/// Number of rows in the event log, header excluded.
///
/// # Safety
/// `run` must be a live run handle.
#[no_mangle]
pub unsafe extern "C" fn vesonet_run_event_count(run: *const VesonetRun) -> usize {
    run.as_ref().map_or(0, |r| r.out.events.len())
}

/// Copies the event-log CSV into `buf` with a trailing NUL. `needed` receives
/// the required size including the NUL, so a first call with a null buffer
/// and zero capacity sizes the second.
///
/// # Safety
/// `run` must be a live run handle, `buf` null or writable for `cap` bytes,
/// `needed` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vesonet_run_events_csv(
    run: *const VesonetRun,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> VesonetStatus {
    let Some(run) = run.as_ref() else {
        return fail(VesonetStatus::NullPointer, "run is null");
    };
    let n = run.csv.len() + 1;
    if let Some(needed) = needed.as_mut() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return fail(VesonetStatus::BufferTooSmall, format!("event log needs {n} bytes"));
    }
    ptr::copy_nonoverlapping(run.csv.as_ptr().cast(), buf, run.csv.len());
    *buf.add(run.csv.len()) = 0;
    VesonetStatus::Ok
}

/// Writes the event-log CSV to `path`.
///
/// # Safety
/// `run` must be a live run handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vesonet_run_write_events(run: *const VesonetRun, path: *const c_char) -> VesonetStatus {
    guard(|| {
        let Some(run) = run.as_ref() else {
            return fail(VesonetStatus::NullPointer, "run is null");
        };
        let path = match text(path, "path") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match std::fs::write(path, &run.csv) {
            Ok(()) => VesonetStatus::Ok,
            Err(e) => fail(VesonetStatus::Io, format!("{path}: {e}")),
        }
    })
}

/// Audits an event-log CSV: recomputes the metrics, checks invariants and,
/// when `metrics_csv` is not null, compares against that runner report.
/// `problems` receives the number of violations and mismatches found.
///
/// # Safety
/// `events_csv` must be a NUL-terminated string, `metrics_csv` null or one,
/// and `problems` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vesonet_audit(
    events_csv: *const c_char,
    metrics_csv: *const c_char,
    problems: *mut usize,
) -> VesonetStatus {
    guard(|| {
        let events = match text(events_csv, "events_csv") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let rows = match audit::parse_log(events) {
            Ok(r) => r,
            Err(bad) => {
                let lines: Vec<String> = bad.iter().map(ToString::to_string).collect();
                return fail(VesonetStatus::Runtime, format!("malformed log: {}", lines.join("; ")));
            }
        };
        let report = audit::audit_rows(&rows);
        let mut found = report.violations;
        if !metrics_csv.is_null() {
            let m = match text(metrics_csv, "metrics_csv") {
                Ok(s) => s,
                Err(s) => return s,
            };
            match audit::parse_metrics_csv(m) {
                Ok(runner) => found.extend(audit::compare(&report.metrics, &runner)),
                Err(bad) => {
                    let lines: Vec<String> = bad.iter().map(ToString::to_string).collect();
                    return fail(VesonetStatus::Runtime, format!("malformed metrics: {}", lines.join("; ")));
                }
            }
        }
        if let Some(p) = problems.as_mut() {
            *p = found.len();
        }
        if found.is_empty() {
            VesonetStatus::Ok
        } else {
            fail(VesonetStatus::AuditFailed, found.join("; "))
        }
    })
}
