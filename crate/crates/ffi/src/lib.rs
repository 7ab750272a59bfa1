//! C ABI over the `mimo-secrecy` library.
//!
//! Matrices cross the boundary as row-major `double` arrays. Objects are
//! opaque handles created by `*_new` functions and released with the
//! matching `*_free`. Every fallible call returns an `MsStatus`; on failure
//! `ms_last_error` describes the most recent error on the calling thread.
//! Rates are in nats.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mimo_secrecy::bcc::{canonicalize, weighted_sum_solve, CanonicalChannel, SolveConfig};
use mimo_secrecy::linalg::SymMatrix;
use mimo_secrecy::oracle::region_member;
use mimo_secrecy::wiretap::{self, ChannelPair, PowerConstraint, RegionPolygon};
use mimo_secrecy::{Error, OptimizerConfig};
use nalgebra::DMatrix;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotPsd = 4,
    Infeasible = 5,
    BudgetExceeded = 6,
    IndexOutOfRange = 7,
    Numerical = 8,
    Panic = 9,
}

impl From<&Error> for MsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) | Error::NonSquare { .. } => MsStatus::Dimension,
            Error::NotPsd { .. } | Error::NotPositiveDefinite { .. } => MsStatus::NotPsd,
            Error::Infeasible(_) => MsStatus::Infeasible,
            Error::BudgetExceeded { .. } => MsStatus::BudgetExceeded,
            Error::IndexOutOfRange(_) => MsStatus::IndexOutOfRange,
            Error::InvalidArgument(_) => MsStatus::InvalidArgument,
            Error::Numerical(_) => MsStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MsStatus, msg: impl Into<String>) -> MsStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), MsStatus>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(MsStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: mimo_secrecy::Result<T>) -> Result<T, MsStatus> {
    r.map_err(|e| fail(MsStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> MsStatus {
    fail(MsStatus::NullPointer, format!("{what} is NULL"))
}

/// # Safety
/// `data` must point to `rows * cols` readable doubles.
unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, MsStatus> {
    if data.is_null() {
        return Err(null(what));
    }
    if rows == 0 || cols == 0 {
        return Err(fail(MsStatus::Dimension, format!("{what} must have nonzero dimensions")));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| fail(MsStatus::Dimension, format!("{what} dimensions overflow")))?;
    let slice = std::slice::from_raw_parts(data, len);
    if slice.iter().any(|v| !v.is_finite()) {
        return Err(fail(MsStatus::InvalidArgument, format!("{what} has non-finite entries")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, slice))
}

/// # Safety
/// `data` must point to `dim * dim` readable doubles.
unsafe fn read_sym(data: *const f64, dim: usize, what: &str) -> Result<SymMatrix, MsStatus> {
    lib(SymMatrix::try_new(read_matrix(data, dim, dim, what)?))
}

/// # Safety
/// `out` must be NULL or point to `dim * dim` writable doubles.
unsafe fn write_sym(m: &SymMatrix, out: *mut f64) {
    if out.is_null() {
        return;
    }
    let d = m.dim();
    let dst = std::slice::from_raw_parts_mut(out, d * d);
    for i in 0..d {
        for j in 0..d {
            dst[i * d + j] = m.as_matrix()[(i, j)];
        }
    }
}

/// # Safety
/// `out` must be NULL or valid for a write.
unsafe fn write<T>(out: *mut T, value: T) -> Result<(), MsStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `½·log det(I + H·S·Hᵀ)` for an `rows × cols` channel and `cols × cols` `S`.
///
/// # Safety
/// `h` must point to `rows * cols` doubles, `s` to `cols * cols` doubles,
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_capacity(h: *const f64, rows: usize, cols: usize, s: *const f64, out: *mut f64) -> MsStatus {
    guard(|| {
        let h = read_matrix(h, rows, cols, "h")?;
        let s = read_sym(s, cols, "s")?;
        write(out, lib(wiretap::capacity(&h, &s))?)
    })
}

/// Wiretap channel with a matrix power constraint.
pub struct MsWiretap {
    pair: ChannelPair,
    s: SymMatrix,
    cfg: OptimizerConfig,
}

/// Creates a wiretap channel. `h_r` is `n_r × n_t`, `h_e` is `n_e × n_t`,
/// `s` is `n_t × n_t`. `seed` drives the optimizer's random starts.
///
/// # Safety
/// Matrix pointers must cover their stated sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_wiretap_new(
    h_r: *const f64,
    n_r: usize,
    h_e: *const f64,
    n_e: usize,
    n_t: usize,
    s: *const f64,
    seed: u64,
    out: *mut *mut MsWiretap,
) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let pair = lib(ChannelPair::new(read_matrix(h_r, n_r, n_t, "h_r")?, read_matrix(h_e, n_e, n_t, "h_e")?))?;
        let s = read_sym(s, n_t, "s")?;
        lib(PowerConstraint::MatrixS(s.clone()).validate(n_t, mimo_secrecy::linalg::DEFAULT_PSD_TOL))?;
        let cfg = OptimizerConfig { seed, ..OptimizerConfig::default() };
        out.write(Box::into_raw(Box::new(MsWiretap { pair, s, cfg })));
        Ok(())
    })
}

/// # Safety
/// `w` must be NULL or a handle from `ms_wiretap_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_wiretap_free(w: *mut MsWiretap) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Capacity of the legitimate receiver's channel.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_wiretap_capacity(w: *const MsWiretap, out: *mut f64) -> MsStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("w"))?;
        write(out, lib(wiretap::capacity(w.pair.h_r(), &w.s))?)
    })
}

/// Secrecy capacity. `b_star` may be NULL or point to `n_t * n_t` doubles
/// that receive the optimal input covariance.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_wiretap_secrecy_capacity(w: *const MsWiretap, out: *mut f64, b_star: *mut f64) -> MsStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("w"))?;
        let r = lib(wiretap::secrecy_capacity(&w.pair, &w.s, &w.cfg))?;
        write(out, r.value)?;
        write_sym(&r.b_star, b_star);
        Ok(())
    })
}

/// Convex rate region with vertices counterclockwise from the origin.
pub struct MsRegion(RegionPolygon);

/// Selects the region computed by `ms_wiretap_region`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsRegionKind {
    /// `(R, Re)`.
    CapacityEquivocation = 0,
    /// `(Rp, Rs)`.
    PrivateConfidential = 1,
}

/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_wiretap_region(w: *const MsWiretap, kind: MsRegionKind, out: *mut *mut MsRegion) -> MsStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("w"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let pc = PowerConstraint::MatrixS(w.s.clone());
        let poly = lib(match kind {
            MsRegionKind::CapacityEquivocation => wiretap::ce_region(&w.pair, &pc, &w.cfg),
            MsRegionKind::PrivateConfidential => wiretap::pc_region(&w.pair, &pc, &w.cfg),
        })?;
        out.write(Box::into_raw(Box::new(MsRegion(poly))));
        Ok(())
    })
}

/// # Safety
/// `r` must be NULL or a live region handle.
#[no_mangle]
pub unsafe extern "C" fn ms_region_free(r: *mut MsRegion) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of vertices, or 0 for a NULL handle.
///
/// # Safety
/// `r` must be NULL or a live region handle.
#[no_mangle]
pub unsafe extern "C" fn ms_region_vertex_count(r: *const MsRegion) -> usize {
    r.as_ref().map_or(0, |r| r.0.vertices.len())
}

/// # Safety
/// `r` must be a live region handle; `x` and `y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_region_vertex(r: *const MsRegion, index: usize, x: *mut f64, y: *mut f64) -> MsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("r"))?;
        let &(vx, vy) = r.0.vertices.get(index).ok_or_else(|| {
            fail(MsStatus::IndexOutOfRange, format!("vertex {index} of {}", r.0.vertices.len()))
        })?;
        write(x, vx)?;
        write(y, vy)
    })
}

/// Writes 1 to `out` if `(x, y)` lies in the region within `tol`, else 0.
///
/// # Safety
/// `r` must be a live region handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_region_contains(r: *const MsRegion, x: f64, y: f64, tol: f64, out: *mut i32) -> MsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("r"))?;
        write(out, i32::from(region_member(&r.0, (x, y), tol)))
    })
}

/// Two-receiver broadcast channel in canonical form.
pub struct MsBroadcast {
    cc: CanonicalChannel,
    cfg: SolveConfig,
}

/// Creates a broadcast channel from square `dim × dim` gains `h1`, `h2` and
/// power constraint `s`. Singular gains are perturbed by `eps·I`.
///
/// # Safety
/// Matrix pointers must cover `dim * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_broadcast_new(
    h1: *const f64,
    h2: *const f64,
    s: *const f64,
    dim: usize,
    eps: f64,
    seed: u64,
    out: *mut *mut MsBroadcast,
) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let h1 = read_matrix(h1, dim, dim, "h1")?;
        let h2 = read_matrix(h2, dim, dim, "h2")?;
        let s = read_sym(s, dim, "s")?;
        let cc = lib(canonicalize(&h1, &h2, &s, eps))?;
        let mut cfg = SolveConfig::default();
        cfg.optimizer.seed = seed;
        out.write(Box::into_raw(Box::new(MsBroadcast { cc, cfg })));
        Ok(())
    })
}

/// # Safety
/// `b` must be NULL or a live broadcast handle.
#[no_mangle]
pub unsafe extern "C" fn ms_broadcast_free(b: *mut MsBroadcast) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Largest achievable common rate.
///
/// # Safety
/// `b` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_broadcast_r0_max(b: *const MsBroadcast, out: *mut f64) -> MsStatus {
    guard(|| {
        let b = b.as_ref().ok_or_else(|| null("b"))?;
        write(out, lib(b.cc.r0_max())?)
    })
}

/// Maximizes `λ1·R1 + λ2·R2` subject to a common rate of at least `r0`.
/// `rates` receives `(R0, R1, R2)`; `b0` and `b1` may be NULL or point to
/// `dim * dim` doubles for the optimal split.
///
/// # Safety
/// `b` must be a live handle; `rates` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ms_broadcast_weighted_sum(
    b: *const MsBroadcast,
    lambda1: f64,
    lambda2: f64,
    r0: f64,
    rates: *mut f64,
    b0: *mut f64,
    b1: *mut f64,
) -> MsStatus {
    guard(|| {
        let b = b.as_ref().ok_or_else(|| null("b"))?;
        if rates.is_null() {
            return Err(null("rates"));
        }
        let sol = lib(weighted_sum_solve(&b.cc, lambda1, lambda2, r0, &b.cfg))?;
        let r = lib(mimo_secrecy::bcc::thm2_canonical_rates(&b.cc, &sol.split))?;
        std::slice::from_raw_parts_mut(rates, 3).copy_from_slice(&[r.r0, r.r1, r.r2]);
        write_sym(&sol.split.b0, b0);
        write_sym(&sol.split.b1, b1);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn status_mapping() {
        assert_eq!(MsStatus::from(&Error::NotPsd { min_eig: -1.0 }), MsStatus::NotPsd);
        assert_eq!(MsStatus::from(&Error::NonSquare { rows: 1, cols: 2 }), MsStatus::Dimension);
        assert_eq!(MsStatus::from(&Error::Numerical("x".into())), MsStatus::Numerical);
    }

    #[test]
    fn errors_are_recorded_per_thread() {
        let mut out = 0.0;
        let st = unsafe { ms_capacity(ptr::null(), 1, 1, ptr::null(), &mut out) };
        assert_eq!(st, MsStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(ms_last_error()) }.to_str().unwrap().to_owned();
        assert!(msg.contains("NULL"));
        std::thread::spawn(|| assert!(ms_last_error().is_null())).join().unwrap();
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(ms_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
