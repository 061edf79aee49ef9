//! C ABI over the `fracmhd` solver.
//!
//! Every fallible call returns a `FracmhdStatus`. On failure a message is
//! stored per thread and can be read with `fracmhd_last_error`. Handles
//! are opaque and must be released with `fracmhd_simulation_free`.
//! Buffers are always caller-owned.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fracmhd::checkpoint::Checkpoint;
use fracmhd::config::RunConfig;
use fracmhd::error::Error;
use fracmhd::ranges::validate_ranges;
use fracmhd::run::Simulation;

/// Bumped on any incompatible change to this interface.
pub const FRACMHD_ABI_VERSION: u32 = 1;

/// Status codes. Positive values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracmhdStatus {
    Ok = 0,
    Config = 2,
    Numerical = 3,
    Property = 4,
    Io = 5,
    NullPointer = -1,
    BufferTooSmall = -2,
    InvalidUtf8 = -3,
    Panic = -4,
}

/// Opaque simulation handle.
pub struct FracmhdSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: FracmhdStatus, msg: impl Into<String>) -> FracmhdStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> FracmhdStatus {
    let status = match e.exit_code() {
        2 => FracmhdStatus::Config,
        3 => FracmhdStatus::Numerical,
        4 => FracmhdStatus::Property,
        _ => FracmhdStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> FracmhdStatus) -> FracmhdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FracmhdStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, FracmhdStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(FracmhdStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn parse_config(t: Option<&str>) -> Result<RunConfig, FracmhdStatus> {
    match t {
        None => Ok(RunConfig::default()),
        Some(t) => RunConfig::parse(t).map_err(|e| from_error(&e)),
    }
}

unsafe fn handle<'a>(sim: *mut FracmhdSimulation) -> Result<&'a mut FracmhdSimulation, FracmhdStatus> {
    sim.as_mut().ok_or_else(|| fail(FracmhdStatus::NullPointer, "null simulation handle"))
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> FracmhdStatus {
    if out.is_null() {
        return fail(FracmhdStatus::NullPointer, "null output buffer");
    }
    if len < values.len() {
        return fail(FracmhdStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", values.len()));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    FracmhdStatus::Ok
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Interface version, see `FRACMHD_ABI_VERSION`.
#[no_mangle]
pub extern "C" fn fracmhd_abi_version() -> u32 {
    FRACMHD_ABI_VERSION
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fracmhd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a simulation at `t = 0` from `key = value` configuration text
/// (NULL for defaults).
///
/// # Safety
/// `config` is NULL or a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_new(
    config: *const c_char,
    out: *mut *mut FracmhdSimulation,
) -> FracmhdStatus {
    guard(|| {
        if out.is_null() {
            return fail(FracmhdStatus::NullPointer, "null output handle pointer");
        }
        let cfg = tri!(parse_config(tri!(text(config, "config"))));
        match Simulation::new(&cfg) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(FracmhdSimulation { sim }));
                FracmhdStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Restores a simulation from a checkpoint file. With `force == 0` the
/// configuration digest must match the one stored in the file.
///
/// # Safety
/// `config` is NULL or a NUL-terminated string, `path` is a NUL-terminated
/// string, `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_from_checkpoint(
    config: *const c_char,
    path: *const c_char,
    force: c_int,
    out: *mut *mut FracmhdSimulation,
) -> FracmhdStatus {
    guard(|| {
        if out.is_null() {
            return fail(FracmhdStatus::NullPointer, "null output handle pointer");
        }
        let cfg = tri!(parse_config(tri!(text(config, "config"))));
        let Some(path) = tri!(text(path, "path")) else {
            return fail(FracmhdStatus::NullPointer, "null checkpoint path");
        };
        let ck = match Checkpoint::load(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return from_error(&e),
        };
        match Simulation::from_checkpoint(&cfg, &ck, force != 0) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(FracmhdSimulation { sim }));
                FracmhdStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_free(sim: *mut FracmhdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Integrates to the next output time and computes its record.
///
/// # Safety
/// `sim` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_advance_output(sim: *mut FracmhdSimulation) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim));
        match h.sim.advance_output() {
            Ok(_) => FracmhdStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Integrates to time `t` without recording.
///
/// # Safety
/// `sim` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_advance_to(sim: *mut FracmhdSimulation, t: f64) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim));
        if !t.is_finite() {
            return fail(FracmhdStatus::Config, format!("target time {t} is not finite"));
        }
        match h.sim.advance_to(t) {
            Ok(_) => FracmhdStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` is a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_time(sim: *const FracmhdSimulation, out: *mut f64) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        *tri!(out.as_mut().ok_or_else(|| fail(FracmhdStatus::NullPointer, "null output"))) = h.sim.state().t;
        FracmhdStatus::Ok
    })
}

/// Grid points per direction.
///
/// # Safety
/// `sim` is a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_grid_size(sim: *const FracmhdSimulation, out: *mut usize) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        *tri!(out.as_mut().ok_or_else(|| fail(FracmhdStatus::NullPointer, "null output"))) = h.sim.grid().n();
        FracmhdStatus::Ok
    })
}

/// Number of values in a record row.
///
/// # Safety
/// `sim` is a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_record_len(
    sim: *const FracmhdSimulation,
    out: *mut usize,
) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        *tri!(out.as_mut().ok_or_else(|| fail(FracmhdStatus::NullPointer, "null output"))) = h.sim.columns().len();
        FracmhdStatus::Ok
    })
}

/// Copies the most recent record row into `out[0..len]`.
///
/// # Safety
/// `sim` is a live handle, `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_record(
    sim: *const FracmhdSimulation,
    out: *mut f64,
    len: usize,
) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        copy_out(&h.sim.last_record().to_row(), out, len)
    })
}

/// Writes the NUL-terminated name of record column `index` into `buf`.
/// `needed` (optional) receives the required size including the NUL.
///
/// # Safety
/// `sim` is a live handle, `buf` points to `len` writable bytes or is NULL
/// with `len == 0`, `needed` is NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_column_name(
    sim: *const FracmhdSimulation,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        let cols = h.sim.columns();
        let Some(name) = cols.get(index) else {
            return fail(FracmhdStatus::Config, format!("column {index} out of range ({} columns)", cols.len()));
        };
        if let Some(n) = needed.as_mut() {
            *n = name.len() + 1;
        }
        if buf.is_null() || len < name.len() + 1 {
            return fail(FracmhdStatus::BufferTooSmall, format!("column name needs {} bytes", name.len() + 1));
        }
        ptr::copy_nonoverlapping(name.as_ptr() as *const c_char, buf, name.len());
        *buf.add(name.len()) = 0;
        FracmhdStatus::Ok
    })
}

/// Field selectors for `fracmhd_simulation_field`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracmhdField {
    Vorticity = 0,
    Current = 1,
}

/// Copies the field selected by a `FracmhdField` value on the `n × n` grid (row-major, index `a·n + b` for
/// the point `(2πa/n, 2πb/n)`) into `out[0..len]`.
///
/// # Safety
/// `sim` is a live handle, `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_field(
    sim: *const FracmhdSimulation,
    field: c_int,
    out: *mut f64,
    len: usize,
) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        let s = h.sim.state();
        let f = match field {
            f if f == FracmhdField::Vorticity as c_int => &s.omega_hat,
            f if f == FracmhdField::Current as c_int => &s.j_hat,
            other => return fail(FracmhdStatus::Config, format!("unknown field selector {other}")),
        };
        copy_out(f.inverse().values(), out, len)
    })
}

/// Writes a checkpoint of the current state.
///
/// # Safety
/// `sim` is a live handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_simulation_save_checkpoint(
    sim: *const FracmhdSimulation,
    path: *const c_char,
) -> FracmhdStatus {
    guard(|| {
        let h = tri!(handle(sim as *mut FracmhdSimulation));
        let Some(path) = tri!(text(path, "path")) else {
            return fail(FracmhdStatus::NullPointer, "null checkpoint path");
        };
        match h.sim.checkpoint().save(Path::new(path)) {
            Ok(()) => FracmhdStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Checks diagnostic exponents for `beta`. `admissible` receives 1 when
/// every entry is admissible, else 0. Any list may be NULL with length 0.
///
/// # Safety
/// Each list pointer is NULL or points to the given number of doubles;
/// `admissible` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracmhd_validate_ranges(
    beta: f64,
    q: *const f64,
    nq: usize,
    s: *const f64,
    ns: usize,
    r: *const f64,
    nr: usize,
    admissible: *mut c_int,
) -> FracmhdStatus {
    guard(|| {
        let slice = |p: *const f64, n: usize| -> Result<&[f64], FracmhdStatus> {
            match (p.is_null(), n) {
                (_, 0) => Ok(&[]),
                (true, _) => Err(fail(FracmhdStatus::NullPointer, "null exponent list with nonzero length")),
                (false, _) => Ok(std::slice::from_raw_parts(p, n)),
            }
        };
        let out = tri!(admissible.as_mut().ok_or_else(|| fail(FracmhdStatus::NullPointer, "null output")));
        let report = validate_ranges(beta, tri!(slice(q, nq)), tri!(slice(s, ns)), tri!(slice(r, nr)));
        *out = report.all_admissible() as c_int;
        if !report.all_admissible() {
            set_error(report.to_string());
        }
        FracmhdStatus::Ok
    })
}
