//! C ABI for the cascade-rd library: opaque handles over validated run
//! configurations, fallible calls returning error codes, and heap strings
//! released through `cascade_rd_string_free`.
//!
//! The stable header lives in `include/cascade_rd.h` and is kept in sync
//! with this file by hand (the build environment has no header generator);
//! `tests` assert the exported surface behaves as documented.
//!
//! Return codes mirror the CLI exit codes:
//! `0` ok, `1` invalid config / argument, `2` infeasible or not found,
//! `3` golden or oracle mismatch, `-1` null pointer or UTF-8 error.

use std::ffi::{c_char, c_int, CStr, CString};

use cascade_rd::cli;

pub const CASCADE_RD_OK: c_int = 0;
pub const CASCADE_RD_ERR_CONFIG: c_int = 1;
pub const CASCADE_RD_ERR_INFEASIBLE: c_int = 2;
pub const CASCADE_RD_ERR_MISMATCH: c_int = 3;
pub const CASCADE_RD_ERR_NULL: c_int = -1;

/// Opaque run handle: a validated configuration document.
pub struct CascadeRdRun {
    config: String,
}

fn to_c_string(s: String) -> *mut c_char {
    // Interior NULs cannot appear in the tool's output; replace defensively
    // rather than aborting across the FFI boundary.
    let sanitized = s.replace('\0', " ");
    CString::new(sanitized).expect("no interior NUL").into_raw()
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn emit(out_text: *mut *mut c_char, out: cli::CmdOutput) -> c_int {
    if !out_text.is_null() {
        unsafe { *out_text = to_c_string(out.text) };
    }
    out.exit as c_int
}

/// Parse and validate a JSON run configuration. On success writes a handle
/// that must be released with `cascade_rd_run_free`. On failure returns a
/// nonzero code and, when `out_error` is non-null, an error message.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated UTF-8 string; out pointers
/// must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_run_new(
    config_json: *const c_char,
    out_run: *mut *mut CascadeRdRun,
    out_error: *mut *mut c_char,
) -> c_int {
    let Some(text) = read_str(config_json) else {
        return CASCADE_RD_ERR_NULL;
    };
    if out_run.is_null() {
        return CASCADE_RD_ERR_NULL;
    }
    match cli::load(text) {
        Ok(_) => {
            let run = Box::new(CascadeRdRun {
                config: text.to_string(),
            });
            *out_run = Box::into_raw(run);
            CASCADE_RD_OK
        }
        Err(e) => {
            if !out_error.is_null() {
                *out_error = to_c_string(e.text);
            }
            e.exit as c_int
        }
    }
}

/// Release a run handle.
///
/// # Safety
/// `run` must be a pointer returned by `cascade_rd_run_new` (or null).
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_run_free(run: *mut CascadeRdRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Release a string returned by any function here.
///
/// # Safety
/// `s` must be a pointer returned by this library (or null).
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluate the explicit decision in the config; writes the plain-text
/// corner report.
///
/// # Safety
/// `run` must be a live handle; `out_text` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_eval(
    run: *const CascadeRdRun,
    out_text: *mut *mut c_char,
) -> c_int {
    let Some(run) = run.as_ref() else {
        return CASCADE_RD_ERR_NULL;
    };
    emit(out_text, cli::cmd_eval(&run.config))
}

/// Trace the frontier/surface; writes the CSV table.
///
/// # Safety
/// `run` must be a live handle; `out_csv` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_frontier_csv(
    run: *const CascadeRdRun,
    out_csv: *mut *mut c_char,
) -> c_int {
    let Some(run) = run.as_ref() else {
        return CASCADE_RD_ERR_NULL;
    };
    emit(out_csv, cli::cmd_frontier(&run.config))
}

/// Membership query. For cascade models pass `has_rb = 0`; for broadcast
/// models pass `has_rb = 1` and the broadcast rate in `rb`. Writes 1 to
/// `out_achievable` when a witness was found, 0 otherwise.
///
/// # Safety
/// `run` must be a live handle; out pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_membership(
    run: *const CascadeRdRun,
    r1: f64,
    r2: f64,
    has_rb: c_int,
    rb: f64,
    out_achievable: *mut c_int,
    out_text: *mut *mut c_char,
) -> c_int {
    let Some(run) = run.as_ref() else {
        return CASCADE_RD_ERR_NULL;
    };
    let rb_opt = if has_rb != 0 { Some(rb) } else { None };
    let out = cli::cmd_membership(&run.config, r1, r2, rb_opt);
    if !out_achievable.is_null() {
        *out_achievable = if out.exit == cli::EXIT_OK { 1 } else { 0 };
    }
    emit(out_text, out)
}

/// Optimizer-vs-oracle comparison at the configured grid; writes the
/// per-weight delta table.
///
/// # Safety
/// `run` must be a live handle; `out_text` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_oracle(
    run: *const CascadeRdRun,
    out_text: *mut *mut c_char,
) -> c_int {
    let Some(run) = run.as_ref() else {
        return CASCADE_RD_ERR_NULL;
    };
    emit(out_text, cli::cmd_oracle(&run.config))
}

/// Project the rate-splitting system; writes the canonical listing and
/// returns 0 exactly when it matches the built-in region. `drop_r2d != 0`
/// omits the nonnegativity of the `r2d` split rate; `reversed != 0` runs
/// the eliminations in reverse order.
///
/// # Safety
/// `out_text` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_fm_listing(
    drop_r2d: c_int,
    reversed: c_int,
    out_text: *mut *mut c_char,
) -> c_int {
    let drops = if drop_r2d != 0 {
        vec!["r2d".to_string()]
    } else {
        vec![]
    };
    emit(out_text, cli::cmd_fm(&drops, reversed != 0))
}

/// Run the degeneration + invariant battery with the given seed; writes
/// the per-check report.
///
/// # Safety
/// `out_text` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_rd_suite(seed: u64, out_text: *mut *mut c_char) -> c_int {
    emit(out_text, cli::cmd_suite(seed))
}

/// Static library version string; do not free.
#[no_mangle]
pub extern "C" fn cascade_rd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
