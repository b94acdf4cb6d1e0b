//! C ABI over `evofrac`.
//!
//! Objects are opaque handles created by `evofrac_*_new`/`_parse` functions and
//! released with the matching `_free`. Every fallible call returns an
//! [`EvofracStatus`]; on failure [`evofrac_last_error`] describes the cause.
//! Complex data crosses the boundary as interleaved `(re, im)` doubles,
//! node-major for signals and row-major for matrices.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evofrac::fraccalc::apply_frac_power;
use evofrac::material::{parse_law, MaterialLaw};
use evofrac::solver::{solve_detailed, EvolutionaryProblem};
use evofrac::spatial::{build_elasticity_1d, build_grad_div_1d, SkewOperator};
use evofrac::timegrid::{Signal, TimeGrid};
use evofrac::wellposed::{parse_projectors, verify_condition_in, ProjectorTriple, WellposednessReport};
use evofrac::Error;
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvofracStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Grid = 3,
    Frac = 4,
    Material = 5,
    Wellposed = 6,
    Spatial = 7,
    Solver = 8,
    Io = 9,
    Panic = 10,
}

pub struct EvofracGrid {
    inner: TimeGrid,
}

pub struct EvofracSignal {
    inner: Signal,
}

pub struct EvofracLaw {
    inner: MaterialLaw,
}

pub struct EvofracProjectors {
    inner: ProjectorTriple,
}

pub struct EvofracSpatial {
    inner: SkewOperator,
}

pub struct EvofracReport {
    inner: WellposednessReport,
    text: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(EvofracStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Grid(_) => EvofracStatus::Grid,
            Error::Frac(_) => EvofracStatus::Frac,
            Error::Material(_) => EvofracStatus::Material,
            Error::Wellposed(_) => EvofracStatus::Wellposed,
            Error::Spatial(_) => EvofracStatus::Spatial,
            Error::Solver(_) => EvofracStatus::Solver,
            Error::Config(_) | Error::Io(_) => EvofracStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! impl_failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

impl_failure_from!(
    evofrac::timegrid::GridError,
    evofrac::fraccalc::FracError,
    evofrac::material::MaterialError,
    evofrac::wellposed::WellposedError,
    evofrac::spatial::SpatialError,
    evofrac::solver::SolverError
);

fn null(what: &str) -> Failure {
    Failure(EvofracStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EvofracStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EvofracStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EvofracStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EvofracStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("text"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("text is not valid UTF-8"))
}

unsafe fn read_complex(p: *const f64, count: usize) -> Result<Vec<Complex64>, Failure> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(null("values"));
    }
    let raw = std::slice::from_raw_parts(p, 2 * count);
    Ok(raw.chunks_exact(2).map(|x| Complex64::new(x[0], x[1])).collect())
}

unsafe fn write_complex(values: &[Complex64], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if capacity < 2 * values.len() {
        return Err(invalid(format!("buffer holds {capacity} doubles, {} needed", 2 * values.len())));
    }
    let dst = std::slice::from_raw_parts_mut(out, 2 * values.len());
    for (pair, z) in dst.chunks_exact_mut(2).zip(values) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
    Ok(())
}

unsafe fn release<T>(handle: *mut T) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn evofrac_grid_free(handle: *mut EvofracGrid) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn evofrac_signal_free(handle: *mut EvofracSignal) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn evofrac_law_free(handle: *mut EvofracLaw) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn evofrac_projectors_free(handle: *mut EvofracProjectors) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn evofrac_spatial_free(handle: *mut EvofracSpatial) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn evofrac_report_free(handle: *mut EvofracReport) {
    release(handle)
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next `evofrac_*` call on the same thread.
#[no_mangle]
pub extern "C" fn evofrac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evofrac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Uniform grid `t_j = t_start + j dt`, `n_steps` a power of two, weight `rho > 0`.
#[no_mangle]
pub unsafe extern "C" fn evofrac_grid_new(
    t_start: f64,
    dt: f64,
    n_steps: usize,
    rho: f64,
    out: *mut *mut EvofracGrid,
) -> EvofracStatus {
    guard(|| store(out, EvofracGrid { inner: TimeGrid::new(t_start, dt, n_steps, rho)? }))
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_grid_n_steps(grid: *const EvofracGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.n_steps())
}

/// Time of node `j`; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn evofrac_grid_time(grid: *const EvofracGrid, j: usize) -> f64 {
    grid.as_ref().map_or(f64::NAN, |g| g.inner.time(j))
}

/// Signal of dimension `dim` from `2 * n_steps * dim` interleaved doubles.
#[no_mangle]
pub unsafe extern "C" fn evofrac_signal_new(
    grid: *const EvofracGrid,
    dim: usize,
    values: *const f64,
    out: *mut *mut EvofracSignal,
) -> EvofracStatus {
    guard(|| {
        let grid = deref(grid, "grid")?.inner;
        let count = grid.n_steps().checked_mul(dim).ok_or_else(|| invalid("signal size overflows"))?;
        let values = read_complex(values, count)?;
        store(out, EvofracSignal { inner: Signal::from_values(grid, dim, values)? })
    })
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_signal_dim(signal: *const EvofracSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.inner.dim())
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_signal_n_steps(signal: *const EvofracSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.inner.grid().n_steps())
}

/// Copies the samples into `out` (`capacity` doubles, at least `2 * n_steps * dim`).
#[no_mangle]
pub unsafe extern "C" fn evofrac_signal_values(
    signal: *const EvofracSignal,
    out: *mut f64,
    capacity: usize,
) -> EvofracStatus {
    guard(|| write_complex(deref(signal, "signal")?.inner.values(), out, capacity))
}

/// `(d + rho)^gamma u` through the discrete transform.
#[no_mangle]
pub unsafe extern "C" fn evofrac_frac_apply(
    gamma: f64,
    signal: *const EvofracSignal,
    out: *mut *mut EvofracSignal,
) -> EvofracStatus {
    guard(|| {
        let u = &deref(signal, "signal")?.inner;
        store(out, EvofracSignal { inner: apply_frac_power(gamma, u)? })
    })
}

/// Material law from its text form (`dim = ...`, `m0 = ...`, `frac <alpha> = ...`).
#[no_mangle]
pub unsafe extern "C" fn evofrac_law_parse(text_ptr: *const c_char, out: *mut *mut EvofracLaw) -> EvofracStatus {
    guard(|| store(out, EvofracLaw { inner: parse_law(text(text_ptr)?)? }))
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_law_dim(law: *const EvofracLaw) -> usize {
    law.as_ref().map_or(0, |l| l.inner.dim())
}

/// Writes `M(1/(i lambda + rho))` row-major into `out` (`2 * dim * dim` doubles).
#[no_mangle]
pub unsafe extern "C" fn evofrac_law_symbol(
    law: *const EvofracLaw,
    lambda: f64,
    rho: f64,
    out: *mut f64,
    capacity: usize,
) -> EvofracStatus {
    guard(|| {
        let m = deref(law, "law")?.inner.symbol_at(lambda, rho)?;
        let row_major: Vec<Complex64> = m.transpose().iter().copied().collect();
        write_complex(&row_major, out, capacity)
    })
}

/// Projector triple from text (`dim`, `p0`, `f0`, `q0`; omitted projectors are zero).
#[no_mangle]
pub unsafe extern "C" fn evofrac_projectors_parse(
    text_ptr: *const c_char,
    out: *mut *mut EvofracProjectors,
) -> EvofracStatus {
    guard(|| store(out, EvofracProjectors { inner: parse_projectors(text(text_ptr)?)? }))
}

/// `A = [[0, div], [grad, 0]]` on `n_cells` cells of width `h`.
#[no_mangle]
pub unsafe extern "C" fn evofrac_spatial_grad_div(n_cells: usize, h: f64, out: *mut *mut EvofracSpatial) -> EvofracStatus {
    guard(|| store(out, EvofracSpatial { inner: build_grad_div_1d(n_cells, h)? }))
}

/// Negated grad-div pair, for elasticity.
#[no_mangle]
pub unsafe extern "C" fn evofrac_spatial_elasticity(
    n_cells: usize,
    h: f64,
    out: *mut *mut EvofracSpatial,
) -> EvofracStatus {
    guard(|| store(out, EvofracSpatial { inner: build_elasticity_1d(n_cells, h)? }))
}

/// `A = 0` of dimension `dim`.
#[no_mangle]
pub unsafe extern "C" fn evofrac_spatial_zero(dim: usize, out: *mut *mut EvofracSpatial) -> EvofracStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        store(out, EvofracSpatial { inner: SkewOperator::zero(dim) })
    })
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_spatial_dim(spatial: *const EvofracSpatial) -> usize {
    spatial.as_ref().map_or(0, |s| s.inner.dim())
}

/// Certifies `law` against `projectors` on `[rho_min, rho_max]`. A failing
/// certificate is a successful call; inspect [`evofrac_report_passed`].
#[no_mangle]
pub unsafe extern "C" fn evofrac_check(
    law: *const EvofracLaw,
    projectors: *const EvofracProjectors,
    rho_min: f64,
    rho_max: f64,
    out: *mut *mut EvofracReport,
) -> EvofracStatus {
    guard(|| {
        let law = &deref(law, "law")?.inner;
        let proj = &deref(projectors, "projectors")?.inner;
        let report = verify_condition_in(law, proj, rho_min, rho_max)?;
        let text = CString::new(report.to_string()).map_err(|_| invalid("report text contains NUL"))?;
        store(out, EvofracReport { inner: report, text })
    })
}

/// 1 if every clause passed, 0 otherwise (also for null).
#[no_mangle]
pub unsafe extern "C" fn evofrac_report_passed(report: *const EvofracReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.inner.passed))
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_report_rho_threshold(report: *const EvofracReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.rho_threshold)
}

#[no_mangle]
pub unsafe extern "C" fn evofrac_report_c0_estimate(report: *const EvofracReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.c0_estimate)
}

/// Aligned plain-text report, owned by the handle.
#[no_mangle]
pub unsafe extern "C" fn evofrac_report_text(report: *const EvofracReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.text.as_ptr())
}

/// Solves `(d M(d^-1) + A) U = f` on the grid of `f` (its `rho` is used).
/// `max_residual` may be null.
#[no_mangle]
pub unsafe extern "C" fn evofrac_solve(
    law: *const EvofracLaw,
    spatial: *const EvofracSpatial,
    rhs: *const EvofracSignal,
    max_residual: *mut f64,
    out: *mut *mut EvofracSignal,
) -> EvofracStatus {
    guard(|| {
        let law = deref(law, "law")?.inner.clone();
        let a = deref(spatial, "spatial")?.inner.clone();
        let f = &deref(rhs, "rhs")?.inner;
        let p = EvolutionaryProblem::new(law, a, *f.grid())?;
        let sol = solve_detailed(&p, f)?;
        if !max_residual.is_null() {
            *max_residual = sol.max_relative_residual;
        }
        store(out, EvofracSignal { inner: sol.u })
    })
}
