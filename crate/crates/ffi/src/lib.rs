#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! C interface to `bladeopt`.
//!
//! Every function returns a [`BoStatus`]; results come back through out
//! pointers. Objects are opaque handles released with their `*_free`
//! function. After a non-`Ok` status, [`bo_last_error_message`] describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use bladeopt::active_subspace::{ActiveDim, ActiveSubspace, GradientSet};
use bladeopt::evaluation::{bem_evaluate, hydrodynamic_coefficients, BemSettings, OperatingPoint};
use bladeopt::geometry::BaselineTable;
use bladeopt::parameterization::ParameterSpace;
use bladeopt::response_optimization::ResponseSurface;
use bladeopt::spline::{BSplineCurve, SplineFit};
use bladeopt::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    FitFailed = 4,
    NotConverged = 5,
    SamplingFailed = 6,
    DegenerateCovariance = 7,
    Infeasible = 8,
    Io = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 99,
}

/// Opaque B-spline curve.
pub struct BoSpline(BSplineCurve);
/// Opaque active subspace.
pub struct BoSubspace(ActiveSubspace);
/// Opaque one-dimensional polynomial response surface.
pub struct BoSurface(ResponseSurface);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BoStatus {
    match e {
        Error::Domain { .. } | Error::Bounds { .. } => BoStatus::OutOfDomain,
        Error::Fit { .. } => BoStatus::FitFailed,
        Error::Convergence { .. } => BoStatus::NotConverged,
        Error::Sampling { .. } => BoStatus::SamplingFailed,
        Error::DegenerateCovariance(_) => BoStatus::DegenerateCovariance,
        Error::Infeasible { .. } => BoStatus::Infeasible,
        Error::Io { .. } => BoStatus::Io,
        Error::Parse { .. } | Error::Schema(_) => BoStatus::Parse,
        _ => BoStatus::InvalidArgument,
    }
}

struct Fail(BoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BoStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BoStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BoStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null("handle"))
}

fn copy_into(src: &[f64], dst: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(BoStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    // SAFETY: caller guarantees `dst` points to `len` writable doubles.
    unsafe { std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len()) };
    Ok(())
}

/// Copies the calling thread's last error message (NUL-terminated, truncated
/// to fit) into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bo_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Advance ratio, thrust and torque coefficients and open-water efficiency
/// from dimensional thrust (N) and torque (N m). `eta` is NaN when undefined.
///
/// # Safety
/// Out pointers must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bo_hydrodynamic_coefficients(
    thrust: f64,
    torque: f64,
    va: f64,
    n_rps: f64,
    diameter: f64,
    rho: f64,
    j: *mut f64,
    kt: *mut f64,
    kq: *mut f64,
    eta: *mut f64,
) -> BoStatus {
    guard(|| {
        let (j, kt, kq, eta) = (out(j, "j")?, out(kt, "kt")?, out(kq, "kq")?, out(eta, "eta")?);
        let c = hydrodynamic_coefficients(thrust, torque, &OperatingPoint::new(va, n_rps, diameter, rho)?)?;
        (*j, *kt, *kq, *eta) = (c.j, c.kt, c.kq, c.eta.unwrap_or(f64::NAN));
        Ok(())
    })
}

/// Least-squares fit of `values` at parameters `params`
/// with averaged knots. `interpolate_ends` pins the end control points to the
/// end data.
///
/// # Safety
/// `params` and `values` must hold `n` doubles; `curve` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_spline_fit(
    params: *const f64,
    values: *const f64,
    n: usize,
    degree: usize,
    n_ctrl: usize,
    interpolate_ends: bool,
    curve: *mut *mut BoSpline,
) -> BoStatus {
    guard(|| {
        let dst = out(curve, "curve")?;
        let (t, v) = (slice(params, n, "params")?, slice(values, n, "values")?);
        let fitted = SplineFit::new(degree, n_ctrl, interpolate_ends).fit(t, v)?;
        *dst = Box::into_raw(Box::new(BoSpline(fitted)));
        Ok(())
    })
}

/// Scalar curve from explicit knots and control values.
///
/// # Safety
/// `knots` must hold `n_knots` doubles and `values` `n_values`; `curve` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_spline_new(
    degree: usize,
    knots: *const f64,
    n_knots: usize,
    values: *const f64,
    n_values: usize,
    curve: *mut *mut BoSpline,
) -> BoStatus {
    guard(|| {
        let dst = out(curve, "curve")?;
        let k = slice(knots, n_knots, "knots")?.to_vec();
        let v = slice(values, n_values, "values")?.to_vec();
        *dst = Box::into_raw(Box::new(BoSpline(BSplineCurve::from_values(degree, k, v)?)));
        Ok(())
    })
}

/// Value (`order` 0) or derivative of a scalar curve at `t`.
///
/// # Safety
/// `curve` must come from `bo_spline_fit`/`bo_spline_new`; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_spline_eval(curve: *const BoSpline, t: f64, order: usize, value: *mut f64) -> BoStatus {
    guard(|| {
        let c = &handle(curve)?.0;
        let dst = out(value, "value")?;
        if c.dim() != 1 {
            return Err(Fail(BoStatus::InvalidArgument, "curve is not scalar".into()));
        }
        *dst = if order == 0 { c.eval1(t)? } else { c.derivative(t, order)?[0] };
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bo_spline_n_ctrl(curve: *const BoSpline) -> usize {
    curve.as_ref().map_or(0, |c| c.0.n_ctrl())
}

/// # Safety
/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bo_spline_free(curve: *mut BoSpline) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Active subspace of the uncentered covariance of `n` gradient rows of
/// length `m` (row-major). `active_dim` 0 selects the largest eigenvalue gap.
///
/// # Safety
/// `gradients` must hold `n * m` doubles; `subspace` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_from_gradients(
    gradients: *const f64,
    n: usize,
    m: usize,
    active_dim: usize,
    subspace: *mut *mut BoSubspace,
) -> BoStatus {
    guard(|| {
        let dst = out(subspace, "subspace")?;
        let g = slice(
            gradients,
            n.checked_mul(m).ok_or_else(|| Fail(BoStatus::InvalidArgument, "size overflow".into()))?,
            "gradients",
        )?;
        let dim = if active_dim == 0 { ActiveDim::Auto } else { ActiveDim::Fixed(active_dim) };
        let set = GradientSet::analytic(DMatrix::from_row_slice(n, m, g))?;
        *dst = Box::into_raw(Box::new(BoSubspace(ActiveSubspace::compute(&set, dim)?)));
        Ok(())
    })
}

/// # Safety
/// `subspace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_dim(subspace: *const BoSubspace) -> usize {
    subspace.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `subspace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_active_dim(subspace: *const BoSubspace) -> usize {
    subspace.as_ref().map_or(0, |s| s.0.active_dim())
}

/// Eigenvalues in descending order.
///
/// # Safety
/// `values` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_eigenvalues(
    subspace: *const BoSubspace,
    values: *mut f64,
    len: usize,
) -> BoStatus {
    guard(|| copy_into(handle(subspace)?.0.eigenvalues().as_slice(), values, len))
}

/// Eigenvector `k` (zero-based).
///
/// # Safety
/// `vector` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_eigenvector(
    subspace: *const BoSubspace,
    k: usize,
    vector: *mut f64,
    len: usize,
) -> BoStatus {
    guard(|| {
        let w = handle(subspace)?.0.eigenvectors();
        if k >= w.ncols() {
            return Err(Error::Index { index: k, len: w.ncols() }.into());
        }
        copy_into(w.column(k).as_slice(), vector, len)
    })
}

/// Active variables `W1^T mu` for a design of length `m`.
///
/// # Safety
/// `mu` must hold `m` doubles and `active` `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_project(
    subspace: *const BoSubspace,
    mu: *const f64,
    m: usize,
    active: *mut f64,
    len: usize,
) -> BoStatus {
    guard(|| {
        let y = handle(subspace)?.0.project(slice(mu, m, "mu")?)?;
        copy_into(y.as_slice(), active, len)
    })
}

/// Minimum-norm design `W1 y` for active variables `y`.
///
/// # Safety
/// `active` must hold `n_active` doubles and `mu` `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_reconstruct(
    subspace: *const BoSubspace,
    active: *const f64,
    n_active: usize,
    mu: *mut f64,
    len: usize,
) -> BoStatus {
    guard(|| {
        let x = handle(subspace)?.0.reconstruct(slice(active, n_active, "active")?, None)?;
        copy_into(x.as_slice(), mu, len)
    })
}

/// # Safety
/// `subspace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bo_subspace_free(subspace: *mut BoSubspace) {
    if !subspace.is_null() {
        drop(Box::from_raw(subspace));
    }
}

/// Polynomial of `degree` fitted to 80% of the `n` points, chosen by a
/// shuffle seeded with `split_seed`.
///
/// # Safety
/// `x` and `y` must hold `n` doubles; `surface` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_surface_fit(
    x: *const f64,
    y: *const f64,
    n: usize,
    degree: usize,
    split_seed: u64,
    surface: *mut *mut BoSurface,
) -> BoStatus {
    guard(|| {
        let dst = out(surface, "surface")?;
        let rs = ResponseSurface::fit(slice(x, n, "x")?, slice(y, n, "y")?, degree, split_seed)?;
        *dst = Box::into_raw(Box::new(BoSurface(rs)));
        Ok(())
    })
}

/// # Safety
/// `value` must be valid for writes; `extrapolated` may be null.
#[no_mangle]
pub unsafe extern "C" fn bo_surface_eval(
    surface: *const BoSurface,
    x: f64,
    value: *mut f64,
    extrapolated: *mut bool,
) -> BoStatus {
    guard(|| {
        let p = handle(surface)?.0.predict(x);
        *out(value, "value")? = p.value;
        if let Some(e) = extrapolated.as_mut() {
            *e = p.extrapolated;
        }
        Ok(())
    })
}

/// Validation R^2 of the fitted surface.
///
/// # Safety
/// `r2` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_surface_validation_r2(surface: *const BoSurface, r2: *mut f64) -> BoStatus {
    guard(|| {
        *out(r2, "r2")? = handle(surface)?.0.metrics().validation_r2;
        Ok(())
    })
}

/// # Safety
/// `surface` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bo_surface_free(surface: *mut BoSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Surrogate performance `[kt, eta, pmax, fmax]` of a design deforming the
/// bundled baseline blade, fitted with `m / 2` control points per curve.
///
/// # Safety
/// `mu` must hold `m` doubles and `outputs` 4 writable doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bo_evaluate_design(
    mu: *const f64,
    m: usize,
    pitch_scale: f64,
    camber_scale: f64,
    diameter: f64,
    n_blades: usize,
    va: f64,
    n_rps: f64,
    rho: f64,
    outputs: *mut f64,
) -> BoStatus {
    guard(|| {
        let mu = slice(mu, m, "mu")?;
        if m == 0 || !m.is_multiple_of(2) {
            return Err(Fail(BoStatus::InvalidArgument, format!("m must be even and positive, got {m}")));
        }
        let dist = BaselineTable::bundled().fit(&SplineFit::new(3, m / 2, true), diameter, n_blades)?;
        let space = ParameterSpace::new(dist)?.with_bound_scales(pitch_scale, camber_scale)?;
        let op = OperatingPoint::new(va, n_rps, diameter, rho)?;
        let perf = bem_evaluate(&space.apply(mu)?, &op, &BemSettings::default())?;
        copy_into(&perf.row(), outputs, 4)
    })
}
