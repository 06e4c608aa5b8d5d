//! C ABI over the network pricing toolkit.
//!
//! Instances live behind the opaque `NppInstance` handle. Every entry point
//! returns an `NppStatus`; on failure, `npp_last_error_message` describes the
//! most recent error on the calling thread. Strings handed out by the
//! library must be released with `npp_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use npp::follower::{follower_cost, Toll};
use npp::instance::{generate_grid, parse, serialize, GeneratorConfig};
use npp::milp::Limits;
use npp::{Instance, NppError};

/// Opaque instance handle.
pub struct NppInstance {
    inner: Instance,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Budget = 5,
    Numerical = 6,
    InvalidArgument = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn fail(status: NppStatus, msg: impl Into<String>) -> NppStatus {
    set_error(msg);
    status
}

fn from_error(e: NppError) -> NppStatus {
    let status = match &e {
        NppError::Syntax { .. } => NppStatus::Parse,
        NppError::Validation(_) => NppStatus::Validation,
        NppError::BudgetExceeded(_) => NppStatus::Budget,
        NppError::Numerical(_) => NppStatus::Numerical,
        NppError::Generation(_) | NppError::Precondition(_) | NppError::Io(_) => NppStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> NppStatus) -> NppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(NppStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn instance<'a>(h: *const NppInstance) -> Result<&'a Instance, NppStatus> {
    h.as_ref().map(|h| &h.inner).ok_or_else(|| fail(NppStatus::NullPointer, "null instance handle"))
}

unsafe fn slice<'a>(data: *const f64, len: usize, want: usize, what: &str) -> Result<&'a [f64], NppStatus> {
    if len != want {
        return Err(fail(NppStatus::InvalidArgument, format!("{what} has {len} entries, expected {want}")));
    }
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(NppStatus::NullPointer, format!("null {what}")));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn hand_out(s: String, out: *mut *mut c_char) -> NppStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            NppStatus::Ok
        }
        Err(_) => fail(NppStatus::InvalidArgument, "output contains a nul byte"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failure on this thread. The pointer stays valid until
/// the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn npp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses an instance from a nul-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn npp_instance_from_json(json: *const c_char, out: *mut *mut NppInstance) -> NppStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(NppStatus::NullPointer, "null argument");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(NppStatus::InvalidUtf8, e.to_string()),
        };
        match parse(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(NppInstance { inner }));
                NppStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Generates a random grid instance with default generator parameters.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn npp_instance_generate_grid(
    side: usize,
    commodities: usize,
    seed: u64,
    out: *mut *mut NppInstance,
) -> NppStatus {
    guard(|| {
        if out.is_null() {
            return fail(NppStatus::NullPointer, "null output");
        }
        match generate_grid(side, commodities, seed, &GeneratorConfig::default()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(NppInstance { inner }));
                NppStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases an instance. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn npp_instance_free(h: *mut NppInstance) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn npp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Serializes an instance to JSON.
///
/// # Safety
/// `h` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn npp_instance_to_json(h: *const NppInstance, out: *mut *mut c_char) -> NppStatus {
    guard(|| {
        let inst = tri!(instance(h));
        if out.is_null() {
            return fail(NppStatus::NullPointer, "null output");
        }
        hand_out(serialize(inst), out)
    })
}

/// Sizes of an instance. Any output pointer may be null.
///
/// # Safety
/// `h` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn npp_instance_counts(
    h: *const NppInstance,
    nodes: *mut usize,
    arcs: *mut usize,
    tolled: *mut usize,
    commodities: *mut usize,
) -> NppStatus {
    guard(|| {
        let inst = tri!(instance(h));
        for (p, v) in [
            (nodes, inst.node_count()),
            (arcs, inst.num_arcs()),
            (tolled, inst.num_tolled()),
            (commodities, inst.num_commodities()),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        NppStatus::Ok
    })
}

/// Solves the instance by branch-and-bound with cuts on `cut_pairs`
/// commodity pairs and writes the solve report as JSON. A non-positive
/// `time_limit_seconds` means no limit.
///
/// # Safety
/// `h` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn npp_solve_report_json(
    h: *const NppInstance,
    cut_pairs: usize,
    time_limit_seconds: f64,
    out: *mut *mut c_char,
) -> NppStatus {
    guard(|| {
        let inst = tri!(instance(h));
        if out.is_null() {
            return fail(NppStatus::NullPointer, "null output");
        }
        if time_limit_seconds.is_nan() {
            return fail(NppStatus::InvalidArgument, "time limit is NaN");
        }
        let limits = Limits {
            time_limit: (time_limit_seconds > 0.0).then(|| Duration::from_secs_f64(time_limit_seconds.min(1e9))),
            gap: 0.0,
        };
        match npp::milp::solve(inst, cut_pairs, &limits) {
            Ok(r) => hand_out(serde_json::to_string(&r).expect("serializable"), out),
            Err(e) => from_error(e),
        }
    })
}

/// Minimum base cost under tolled-arc capacities `w` (one per tolled arc).
///
/// # Safety
/// `h` must be a live handle, `w` must point to `len` doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn npp_conjugate_g(h: *const NppInstance, w: *const f64, len: usize, out: *mut f64) -> NppStatus {
    guard(|| {
        let inst = tri!(instance(h));
        let w = tri!(slice(w, len, inst.num_tolled(), "w"));
        if out.is_null() {
            return fail(NppStatus::NullPointer, "null output");
        }
        match npp::conjugate::conjugate_g(inst, w) {
            Ok((g, _)) => {
                *out = g;
                NppStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Classifies an integral reduced reaction; `*is_strong` is set to 1 for
/// strong and 0 for weak.
///
/// # Safety
/// `h` must be a live handle, `w` must point to `len` doubles and
/// `is_strong` must be writable.
#[no_mangle]
pub unsafe extern "C" fn npp_classify_w(
    h: *const NppInstance,
    w: *const f64,
    len: usize,
    is_strong: *mut c_int,
) -> NppStatus {
    guard(|| {
        let inst = tri!(instance(h));
        let w = tri!(slice(w, len, inst.num_tolled(), "w"));
        if is_strong.is_null() {
            return fail(NppStatus::NullPointer, "null output");
        }
        let sets = match npp::bifeas::enumerate_all(inst, npp::bifeas::DEFAULT_SUBSET_BUDGET) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        match npp::bifeas::classify_w(inst, w, &sets) {
            Ok(c) => {
                *is_strong = c_int::from(c.strength == npp::bifeas::Strength::Strong);
                NppStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Demand-weighted follower cost at tolls `t`. `INFINITY` marks an
/// unbounded toll.
///
/// # Safety
/// `h` must be a live handle, `t` must point to `len` doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn npp_follower_cost(
    h: *const NppInstance,
    t: *const f64,
    len: usize,
    out: *mut f64,
) -> NppStatus {
    guard(|| {
        let inst = tri!(instance(h));
        let t = tri!(slice(t, len, inst.num_tolled(), "t"));
        if out.is_null() {
            return fail(NppStatus::NullPointer, "null output");
        }
        let mut tolls = Vec::with_capacity(t.len());
        for &v in t {
            if v == f64::INFINITY {
                tolls.push(Toll::Unbounded);
            } else if v.is_finite() && v >= 0.0 {
                tolls.push(Toll::Finite(v));
            } else {
                return fail(NppStatus::InvalidArgument, format!("invalid toll {v}"));
            }
        }
        match follower_cost(inst, &tolls) {
            Ok(c) => {
                *out = c;
                NppStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
