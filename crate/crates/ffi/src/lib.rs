//! C ABI for the one-dimensional solvers and verifiers.
//!
//! Measures and couplings are opaque handles created and freed through this
//! API. Every call returns a [`MotStatus`]; on failure the message is
//! available from [`mot_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use mot_core::lp::{solve_lp, LpStatus, Sense};
use mot_core::measures::convex_order_check;
use mot_core::mot1d::{detect_separation, solve_sweep, SeparationInterval};
use mot_core::verify::{deformation_curve, swap_gain, DeformationInstance};
use mot_core::{Coupling, DiscreteMeasure, MotError, TransportMaps};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotStatus {
    Ok = 0,
    NotInConvexOrder = 1,
    Infeasible = 2,
    InvalidInput = 3,
    SeparationViolated = 4,
    SolverFailure = 5,
    NullPointer = 6,
    Panic = 7,
}

/// A finite measure on the real line.
pub struct MotMeasure {
    inner: DiscreteMeasure,
}

/// A one-dimensional coupling, with transport maps when produced by the sweep.
pub struct MotCoupling {
    coupling: Coupling,
    maps: Option<TransportMaps>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotOrderReport {
    pub in_order: bool,
    pub mass_gap: f64,
    pub mean_gap: f64,
    pub worst_k: f64,
    pub worst_gap: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotEntry {
    pub x: f64,
    pub y: f64,
    pub mass: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotMapRow {
    pub x: f64,
    pub s: f64,
    pub t: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(MotError),
    Null(&'static str),
    Index(usize),
}

impl From<MotError> for Failure {
    fn from(e: MotError) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &MotError) -> MotStatus {
    match e {
        MotError::NotInConvexOrder { .. } => MotStatus::NotInConvexOrder,
        MotError::Infeasible => MotStatus::Infeasible,
        MotError::SeparationViolated(_) => MotStatus::SeparationViolated,
        MotError::SolverFailure { .. } => MotStatus::SolverFailure,
        _ => MotStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MotStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MotStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(&format!("null pointer: {name}"));
            MotStatus::NullPointer
        }
        Ok(Err(Failure::Index(i))) => {
            set_error(&format!("index {i} out of range"));
            MotStatus::InvalidInput
        }
        Err(_) => {
            set_error("internal panic");
            MotStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: the caller guarantees `len` readable values at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a measure from `len` positions and masses.
///
/// # Safety
/// `positions` and `masses` must point to `len` readable doubles and `out`
/// to a writable handle slot. The handle must be released with
/// [`mot_measure_free`].
#[no_mangle]
pub unsafe extern "C" fn mot_measure_new(
    positions: *const f64,
    masses: *const f64,
    len: usize,
    out: *mut *mut MotMeasure,
) -> MotStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let positions = unsafe { slice(positions, len, "positions")? };
        let masses = unsafe { slice(masses, len, "masses")? };
        let inner = DiscreteMeasure::new(1, positions.to_vec(), masses.to_vec())?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(MotMeasure { inner })) };
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`mot_measure_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mot_measure_free(m: *mut MotMeasure) {
    if !m.is_null() {
        // SAFETY: the handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Number of atoms after merging; zero for a null handle.
///
/// # Safety
/// `m` must be null or a live measure handle.
#[no_mangle]
pub unsafe extern "C" fn mot_measure_len(m: *const MotMeasure) -> usize {
    unsafe { m.as_ref() }.map_or(0, |m| m.inner.len())
}

/// Total mass; NaN for a null handle.
///
/// # Safety
/// `m` must be null or a live measure handle.
#[no_mangle]
pub unsafe extern "C" fn mot_measure_total_mass(m: *const MotMeasure) -> f64 {
    unsafe { m.as_ref() }.map_or(f64::NAN, |m| m.inner.total_mass())
}

/// Convex-order test. Returns `MOT_STATUS_OK` with the report filled in
/// whether or not the pair is in order.
///
/// # Safety
/// `mu`, `nu` must be live measure handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mot_convex_order_check(
    mu: *const MotMeasure,
    nu: *const MotMeasure,
    tol: f64,
    out: *mut MotOrderReport,
) -> MotStatus {
    guard(|| {
        let mu = unsafe { as_ref(mu, "mu")? };
        let nu = unsafe { as_ref(nu, "nu")? };
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let r = convex_order_check(&mu.inner, &nu.inner, tol)?;
        // SAFETY: checked non-null above.
        unsafe {
            *out = MotOrderReport {
                in_order: r.in_order,
                mass_gap: r.mass_gap,
                mean_gap: r.mean_gap,
                worst_k: r.worst_k,
                worst_gap: r.worst_gap,
            }
        };
        Ok(())
    })
}

unsafe fn store(out: *mut *mut MotCoupling, c: MotCoupling) {
    // SAFETY: callers check `out` for null.
    unsafe { *out = Box::into_raw(Box::new(c)) };
}

/// Frontier sweep on the interval `(a, b)`; pass NaN for either end to use
/// the widest interval that separates the marginals.
///
/// # Safety
/// `mu`, `nu` must be live measure handles and `out` a writable handle slot.
/// The coupling must be released with [`mot_coupling_free`].
#[no_mangle]
pub unsafe extern "C" fn mot_solve_sweep(
    mu: *const MotMeasure,
    nu: *const MotMeasure,
    a: f64,
    b: f64,
    tol: f64,
    out: *mut *mut MotCoupling,
) -> MotStatus {
    guard(|| {
        let mu = unsafe { as_ref(mu, "mu")? };
        let nu = unsafe { as_ref(nu, "nu")? };
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let interval = if a.is_nan() || b.is_nan() {
            detect_separation(&mu.inner, &nu.inner)
                .ok_or_else(|| MotError::SeparationViolated("no interval separates mu from nu".into()))?
        } else {
            SeparationInterval::new(a, b)?
        };
        let sol = solve_sweep(&mu.inner, &nu.inner, interval, tol)?;
        unsafe {
            store(
                out,
                MotCoupling {
                    coupling: sol.coupling,
                    maps: Some(sol.maps),
                },
            )
        };
        Ok(())
    })
}

/// LP oracle; minimizes the cost unless `maximize` is set.
///
/// # Safety
/// As for [`mot_solve_sweep`].
#[no_mangle]
pub unsafe extern "C" fn mot_solve_lp(
    mu: *const MotMeasure,
    nu: *const MotMeasure,
    p: f64,
    maximize: bool,
    out: *mut *mut MotCoupling,
) -> MotStatus {
    guard(|| {
        let mu = unsafe { as_ref(mu, "mu")? };
        let nu = unsafe { as_ref(nu, "nu")? };
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let sense = if maximize { Sense::Max } else { Sense::Min };
        let sol = solve_lp(&mu.inner, &nu.inner, p, sense)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(MotError::Infeasible.into()),
            LpStatus::NumericalFailure => {
                return Err(MotError::SolverFailure {
                    reason: "LP did not converge".into(),
                    residual: sol.residual,
                }
                .into())
            }
        }
        unsafe {
            store(
                out,
                MotCoupling {
                    coupling: sol.coupling,
                    maps: None,
                },
            )
        };
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a coupling handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_free(c: *mut MotCoupling) {
    if !c.is_null() {
        // SAFETY: the handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(c) });
    }
}

/// # Safety
/// `c` must be null or a live coupling handle.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_len(c: *const MotCoupling) -> usize {
    unsafe { c.as_ref() }.map_or(0, |c| c.coupling.len())
}

/// # Safety
/// `c` must be a live coupling handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_entry(c: *const MotCoupling, index: usize, out: *mut MotEntry) -> MotStatus {
    guard(|| {
        let c = unsafe { as_ref(c, "coupling")? };
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let e = c.coupling.entries().get(index).ok_or(Failure::Index(index))?;
        // SAFETY: checked non-null above.
        unsafe {
            *out = MotEntry {
                x: e.x[0],
                y: e.y[0],
                mass: e.mass,
            }
        };
        Ok(())
    })
}

/// `sum mass * |x - y|^p`; NaN for a null handle.
///
/// # Safety
/// `c` must be null or a live coupling handle.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_cost(c: *const MotCoupling, p: f64) -> f64 {
    unsafe { c.as_ref() }.map_or(f64::NAN, |c| c.coupling.cost(p))
}

/// Number of map rows; zero for LP couplings.
///
/// # Safety
/// `c` must be null or a live coupling handle.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_map_count(c: *const MotCoupling) -> usize {
    unsafe { c.as_ref() }.and_then(|c| c.maps.as_ref()).map_or(0, |m| m.rows.len())
}

/// # Safety
/// `c` must be a live coupling handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_map_row(c: *const MotCoupling, index: usize, out: *mut MotMapRow) -> MotStatus {
    guard(|| {
        let c = unsafe { as_ref(c, "coupling")? };
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let r = c
            .maps
            .as_ref()
            .and_then(|m| m.rows.get(index))
            .ok_or(Failure::Index(index))?;
        // SAFETY: checked non-null above.
        unsafe {
            *out = MotMapRow {
                x: r.x,
                s: r.s,
                t: r.t,
                lambda_minus: r.lambda_minus,
                lambda_plus: r.lambda_plus,
            }
        };
        Ok(())
    })
}

/// Coupling JSON as written by the command line tool. Free the string with
/// [`mot_string_free`]. Returns null on failure.
///
/// # Safety
/// `c` must be null or a live coupling handle.
#[no_mangle]
pub unsafe extern "C" fn mot_coupling_to_json(c: *const MotCoupling) -> *mut c_char {
    let mut text = None;
    let status = guard(|| {
        let c = unsafe { as_ref(c, "coupling")? };
        let file = mot_core::io::CouplingFile::new(&c.coupling, None, None, c.maps.as_ref());
        let json = serde_json::to_string(&file).map_err(MotError::from)?;
        text = Some(CString::new(json).expect("JSON has no interior nul"));
        Ok(())
    });
    match (status, text) {
        (MotStatus::Ok, Some(s)) => s.into_raw(),
        _ => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mot_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the string came from `CString::into_raw`.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Cost change of the three-point swap; positive when the swap is cheaper.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mot_swap_gain(
    x: f64,
    y_minus: f64,
    y_plus: f64,
    x_prime: f64,
    y_prime: f64,
    p: f64,
    out: *mut f64,
) -> MotStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let g = swap_gain(x, y_minus, y_plus, x_prime, y_prime, p)?;
        // SAFETY: checked non-null above.
        unsafe { *out = g };
        Ok(())
    })
}

/// Evaluates the deformation curve on `grid` points of `[0, 1]`.
///
/// # Safety
/// `t_out` and `c_out` must each have room for `grid` doubles.
#[no_mangle]
pub unsafe extern "C" fn mot_deformation_curve(
    b: f64,
    r: f64,
    z: f64,
    q: f64,
    grid: usize,
    t_out: *mut f64,
    c_out: *mut f64,
) -> MotStatus {
    guard(|| {
        if t_out.is_null() || c_out.is_null() {
            return Err(Failure::Null("output buffer"));
        }
        let inst = DeformationInstance::new(b, r, z, q)?;
        let curve = deformation_curve(&inst, grid)?;
        for (i, (t, c)) in curve.into_iter().enumerate() {
            // SAFETY: the caller provides `grid` slots in each buffer.
            unsafe {
                *t_out.add(i) = t;
                *c_out.add(i) = c;
            }
        }
        Ok(())
    })
}
