//! C ABI over the simulator: feed a JSON configuration in, get artifacts
//! back as strings, with integer status codes mirroring the CLI's exit
//! codes. Every handle and string returned here is owned by this library
//! and must be released with the matching `_free` function.
//!
//! All entry points catch panics; nothing unwinds across the boundary.

use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stcsim::config::RunConfig;
use stcsim::output::{write_events_csv, write_trace_csv};
use stcsim::runner::{check_config, execute_run, RunArtifacts};

/// The run completed (possibly truncated at the event cap; see the summary).
pub const STCSIM_OK: c_int = 0;
/// The configuration failed to parse or validate.
pub const STCSIM_ERR_CONFIG: c_int = 1;
/// The run completed but a verification monitor flagged the trace. The
/// handle is still valid so the violation details can be read.
pub const STCSIM_ERR_MONITOR: c_int = 2;
/// `stcsim_check`: the parameters carry no convergence guarantee.
pub const STCSIM_ERR_INFEASIBLE: c_int = 3;
/// A required pointer was null or a string was not valid UTF-8.
pub const STCSIM_ERR_ARGUMENT: c_int = 4;
/// An internal invariant failed; the operation was aborted safely.
pub const STCSIM_ERR_INTERNAL: c_int = 5;

/// A completed simulation: trace, events, summary, and monitor verdicts.
/// Opaque; create with `stcsim_run_new`, release with `stcsim_run_free`.
pub struct StcsimRun {
    artifacts: RunArtifacts,
}

fn parse_utf8<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        return None;
    }
    // SAFETY: the caller promises a NUL-terminated string; null was checked.
    unsafe { CStr::from_ptr(s) }.to_str().ok()
}

/// Transfer a Rust string to the caller. NUL bytes cannot occur in our JSON
/// or CSV output, but degrade to null instead of panicking if they ever do.
fn give_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => ptr::null_mut(),
    }
}

fn guarded<F: FnOnce() -> c_int>(f: F) -> c_int {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(STCSIM_ERR_INTERNAL)
}

/// Parse `config_json` and simulate it. On `STCSIM_OK` and
/// `STCSIM_ERR_MONITOR`, `*out_run` receives a handle the caller must free;
/// on any other status `*out_run` is set to null.
///
/// # Safety
/// `config_json` must be a NUL-terminated string or null; `out_run` must be
/// a valid pointer to writable memory or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_run_new(
    config_json: *const c_char,
    out_run: *mut *mut StcsimRun,
) -> c_int {
    if out_run.is_null() {
        return STCSIM_ERR_ARGUMENT;
    }
    unsafe { *out_run = ptr::null_mut() };
    guarded(|| {
        let Some(json) = parse_utf8(config_json) else {
            return STCSIM_ERR_ARGUMENT;
        };
        let cfg = match RunConfig::from_json(json) {
            Ok(cfg) => cfg,
            Err(_) => return STCSIM_ERR_CONFIG,
        };
        let artifacts = match execute_run(&cfg) {
            Ok(a) => a,
            Err(_) => return STCSIM_ERR_CONFIG,
        };
        let passed = artifacts.summary.monitors.all_passed;
        let handle = Box::into_raw(Box::new(StcsimRun { artifacts }));
        unsafe { *out_run = handle };
        if passed {
            STCSIM_OK
        } else {
            STCSIM_ERR_MONITOR
        }
    })
}

/// Release a handle returned by `stcsim_run_new`. Null is a no-op.
///
/// # Safety
/// `run` must be a handle from `stcsim_run_new` not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_run_free(run: *mut StcsimRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

/// The run summary as pretty-printed JSON, or null on a null handle.
/// Release with `stcsim_string_free`.
///
/// # Safety
/// `run` must be a live handle from `stcsim_run_new`, or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_run_summary_json(run: *const StcsimRun) -> *mut c_char {
    let Some(run) = (unsafe { run.as_ref() }) else {
        return ptr::null_mut();
    };
    match serde_json::to_string_pretty(&run.artifacts.summary) {
        Ok(s) => give_string(s),
        Err(_) => ptr::null_mut(),
    }
}

/// The state/control trace as CSV (`t,x_0..,u_0..`), or null on a null
/// handle. Release with `stcsim_string_free`.
///
/// # Safety
/// `run` must be a live handle from `stcsim_run_new`, or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_run_trace_csv(run: *const StcsimRun) -> *mut c_char {
    let Some(run) = (unsafe { run.as_ref() }) else {
        return ptr::null_mut();
    };
    let mut buf = Vec::new();
    let n = run.artifacts.graph.n();
    match write_trace_csv(&mut buf, &run.artifacts.trace, n) {
        Ok(()) => give_string(String::from_utf8_lossy(&buf).into_owned()),
        Err(_) => ptr::null_mut(),
    }
}

/// The discrete-event log as CSV (`t,kind,id,value,control,wait`), or null
/// on a null handle. Release with `stcsim_string_free`.
///
/// # Safety
/// `run` must be a live handle from `stcsim_run_new`, or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_run_events_csv(run: *const StcsimRun) -> *mut c_char {
    let Some(run) = (unsafe { run.as_ref() }) else {
        return ptr::null_mut();
    };
    let mut buf = Vec::new();
    match write_events_csv(&mut buf, &run.artifacts.trace, &run.artifacts.graph) {
        Ok(()) => give_string(String::from_utf8_lossy(&buf).into_owned()),
        Err(_) => ptr::null_mut(),
    }
}

/// 1 if every applicable verification monitor passed, 0 if any flagged the
/// trace, -1 on a null handle.
///
/// # Safety
/// `run` must be a live handle from `stcsim_run_new`, or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_run_monitors_passed(run: *const StcsimRun) -> c_int {
    match unsafe { run.as_ref() } {
        Some(run) if run.artifacts.summary.monitors.all_passed => 1,
        Some(_) => 0,
        None => -1,
    }
}

/// Evaluate the configuration's dwell floors and feasibility margins
/// without simulating. Returns `STCSIM_OK` when the guarantees hold,
/// `STCSIM_ERR_INFEASIBLE` when some condition fails, `STCSIM_ERR_CONFIG`
/// on malformed input. If `out_report_json` is non-null it receives the
/// report as JSON on both OK and INFEASIBLE (release with
/// `stcsim_string_free`).
///
/// # Safety
/// `config_json` must be a NUL-terminated string or null; `out_report_json`
/// must be a valid pointer to writable memory or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_check(
    config_json: *const c_char,
    out_report_json: *mut *mut c_char,
) -> c_int {
    if !out_report_json.is_null() {
        unsafe { *out_report_json = ptr::null_mut() };
    }
    guarded(|| {
        let Some(json) = parse_utf8(config_json) else {
            return STCSIM_ERR_ARGUMENT;
        };
        let cfg = match RunConfig::from_json(json) {
            Ok(cfg) => cfg,
            Err(_) => return STCSIM_ERR_CONFIG,
        };
        let report = match check_config(&cfg) {
            Ok(report) => report,
            Err(_) => return STCSIM_ERR_CONFIG,
        };
        if !out_report_json.is_null() {
            if let Ok(s) = serde_json::to_string_pretty(&report) {
                unsafe { *out_report_json = give_string(s) };
            }
        }
        if report.feasible {
            STCSIM_OK
        } else {
            STCSIM_ERR_INFEASIBLE
        }
    })
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a string returned by this library not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn stcsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// The library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn stcsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
        "graph": {"kind": "edges", "n": 2, "edges": [[0, 1]]},
        "protocol": {"id": "A", "eps": 0.02},
        "x0": [1.0, -1.0],
        "horizon": 10.0
    }"#;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn take_string(p: *mut c_char) -> String {
        assert!(!p.is_null());
        let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
        unsafe { stcsim_string_free(p) };
        s
    }

    #[test]
    fn run_round_trip_through_the_c_surface() {
        let cfg = cstr(PAIR);
        let mut run: *mut StcsimRun = ptr::null_mut();
        let code = unsafe { stcsim_run_new(cfg.as_ptr(), &mut run) };
        assert_eq!(code, STCSIM_OK);
        assert!(!run.is_null());
        assert_eq!(unsafe { stcsim_run_monitors_passed(run) }, 1);

        let summary = take_string(unsafe { stcsim_run_summary_json(run) });
        let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(parsed["t_freeze"], 0.9921875);
        assert_eq!(parsed["c"], 6);

        let trace = take_string(unsafe { stcsim_run_trace_csv(run) });
        assert!(trace.starts_with("t,x_0,x_1,u_0,u_1\n"));
        let events = take_string(unsafe { stcsim_run_events_csv(run) });
        assert!(events.contains("0,poll,0,-2,-1,0.5"));

        unsafe { stcsim_run_free(run) };
    }

    #[test]
    fn malformed_config_reports_config_error_and_no_handle() {
        let cfg = cstr(r#"{"graph": {"kind": "ring", "n": 2}}"#);
        let mut run: *mut StcsimRun = ptr::null_mut();
        let code = unsafe { stcsim_run_new(cfg.as_ptr(), &mut run) };
        assert_eq!(code, STCSIM_ERR_CONFIG);
        assert!(run.is_null());
    }

    #[test]
    fn null_arguments_are_rejected_not_dereferenced() {
        let mut run: *mut StcsimRun = ptr::null_mut();
        assert_eq!(
            unsafe { stcsim_run_new(ptr::null(), &mut run) },
            STCSIM_ERR_ARGUMENT
        );
        assert!(run.is_null());
        assert_eq!(
            unsafe { stcsim_run_new(cstr("{}").as_ptr(), ptr::null_mut()) },
            STCSIM_ERR_ARGUMENT
        );
        assert_eq!(unsafe { stcsim_run_monitors_passed(ptr::null()) }, -1);
        assert!(unsafe { stcsim_run_summary_json(ptr::null()) }.is_null());
        unsafe { stcsim_run_free(ptr::null_mut()) };
        unsafe { stcsim_string_free(ptr::null_mut()) };
    }

    #[test]
    fn check_distinguishes_feasible_infeasible_and_malformed() {
        let mut report: *mut c_char = ptr::null_mut();
        let ok = cstr(PAIR);
        assert_eq!(unsafe { stcsim_check(ok.as_ptr(), &mut report) }, STCSIM_OK);
        let text = take_string(report);
        assert!(text.contains("dwell floor"));

        let zeno = cstr(
            r#"{
                "graph": {"kind": "ring", "n": 5},
                "protocol": {
                    "id": "B",
                    "eps_sched": {"kind": "hyperbolic", "a": 0.05, "p": 2},
                    "gamma_sched": {"kind": "hyperbolic", "a": 0.25, "p": 1}
                },
                "x0": {"lo": -1.0, "hi": 1.0, "seed": 2}
            }"#,
        );
        let mut report: *mut c_char = ptr::null_mut();
        let code = unsafe { stcsim_check(zeno.as_ptr(), &mut report) };
        assert_eq!(code, STCSIM_ERR_INFEASIBLE);
        assert!(take_string(report).contains("Zeno"));

        let bad = cstr("not json");
        assert_eq!(
            unsafe { stcsim_check(bad.as_ptr(), ptr::null_mut()) },
            STCSIM_ERR_CONFIG
        );
    }

    #[test]
    fn version_is_a_static_nul_terminated_string() {
        let v = unsafe { CStr::from_ptr(stcsim_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
