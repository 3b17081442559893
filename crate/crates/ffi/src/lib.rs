//! C ABI over `eqk`: opaque norm and point-set handles, status codes, and a
//! thread-local last-error message.
//!
//! Every function returns an [`EqkStatus`] (or a plain value documented as
//! such) and never unwinds across the boundary; panics map to
//! `EQK_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eqk::construct::{self, ConstructionParameters, PointSet, PAIRWISE_CERT_LIMIT};
use eqk::norms::NormSpec;
use eqk::perturbed::{self, PerturbationProblem, ProblemOptions, Variant};
use eqk::verify;
use eqk::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or invalid JSON input.
    Parse = 3,
    Parameter = 4,
    /// Input outside the domain (wrong length, non-finite entry, off the hyperplane).
    Domain = 5,
    /// The norm lacks the structure the operation needs.
    Capability = 6,
    /// A hypothesis of the construction is violated.
    Hypothesis = 7,
    /// A numerical procedure failed to reach its tolerance.
    Numerical = 8,
    /// Output would exceed the size cap.
    Scale = 9,
    Panic = 10,
}

/// Opaque norm handle.
pub struct EqkNorm {
    spec: NormSpec,
}

/// Opaque point-set handle.
pub struct EqkPointSet {
    set: PointSet,
    /// Free coordinates of a sign-cube set, used for structural certification.
    free: Option<Vec<usize>>,
}

/// Summary of an equilateral certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EqkCertificate {
    pub m: usize,
    pub claimed: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(EqkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            e if e.is_numerical_failure() => EqkStatus::Numerical,
            Error::Domain(_) | Error::DimensionMismatch { .. } | Error::NonFinite(_) | Error::Membership(_) => {
                EqkStatus::Domain
            }
            Error::Capability(_) => EqkStatus::Capability,
            Error::Hypothesis(_) => EqkStatus::Hypothesis,
            Error::Scale(_) => EqkStatus::Scale,
            _ => EqkStatus::Parameter,
        };
        Failure(status, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EqkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EqkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            EqkStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EqkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(EqkStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eqk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eqk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a JSON norm specification.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eqk_norm_from_json(json: *const c_char, out: *mut *mut EqkNorm) -> EqkStatus {
    guard(|| {
        let text = as_str(json, "json")?;
        let spec = NormSpec::from_json(text).map_err(|e| Failure(EqkStatus::Parse, e.to_string()))?;
        write(out, Box::into_raw(Box::new(EqkNorm { spec })), "out")
    })
}

/// # Safety
/// `norm` must be NULL or a handle from [`eqk_norm_from_json`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn eqk_norm_free(norm: *mut EqkNorm) {
    if !norm.is_null() {
        drop(Box::from_raw(norm));
    }
}

/// Ambient dimension, or 0 for NULL.
///
/// # Safety
/// `norm` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqk_norm_dim(norm: *const EqkNorm) -> usize {
    norm.as_ref().map_or(0, |n| n.spec.dim)
}

/// `‖x‖` for `x` of length `len`.
///
/// # Safety
/// `norm` must be a live handle, `x` must point to `len` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn eqk_norm_eval(norm: *const EqkNorm, x: *const f64, len: usize, out: *mut f64) -> EqkStatus {
    guard(|| {
        let norm = as_ref(norm, "norm")?;
        let x = as_slice(x, len, "x")?;
        let v = norm.spec.norm_eval(x)?;
        write(out, v, "out")
    })
}

/// Builds the equilateral set for `norm` with the construction that applies.
/// `k` is the number of dominant coefficients for hyperplane norms; pass 0
/// for the smallest valid value.
///
/// # Safety
/// `norm` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eqk_construct(norm: *const EqkNorm, k: usize, out: *mut *mut EqkPointSet) -> EqkStatus {
    guard(|| {
        let norm = as_ref(norm, "norm")?;
        let built = construct::construct_for(&norm.spec, (k > 0).then_some(k))?;
        let free = match built.parameters {
            ConstructionParameters::LinftySubspace { free_coordinates, .. } => Some(free_coordinates),
            _ => None,
        };
        write(out, Box::into_raw(Box::new(EqkPointSet { set: built.set, free })), "out")
    })
}

/// Solves the fixed-point problem moving the base equilateral set to the
/// target norm. `variant` is "symmetric", "orlicz" or "subspace"; `k` as in
/// [`eqk_construct`] (subspace only, 0 for default).
///
/// # Safety
/// Handles must be live, `variant` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eqk_perturb(
    base: *const EqkNorm,
    target: *const EqkNorm,
    variant: *const c_char,
    k: usize,
    seed: u64,
    out: *mut *mut EqkPointSet,
) -> EqkStatus {
    guard(|| {
        let base = as_ref(base, "base")?;
        let target = as_ref(target, "target")?;
        let variant: Variant = as_str(variant, "variant")?.parse()?;
        let opts = ProblemOptions { k: (k > 0).then_some(k), seed, ..Default::default() };
        let problem = PerturbationProblem::new(variant, &base.spec, &target.spec, &opts)?;
        let outcome = perturbed::solve_and_certify(&problem)?;
        write(out, Box::into_raw(Box::new(EqkPointSet { set: outcome.set, free: None })), "out")
    })
}

/// `R(p, n)` for `ℓp`, `1 < p < ∞`, `n ≥ 3`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eqk_radius_lp(p: f64, n: u64, out: *mut f64) -> EqkStatus {
    guard(|| write(out, construct::radius_lp(p, n)?, "out"))
}

/// # Safety
/// `set` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn eqk_point_set_free(set: *mut EqkPointSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqk_point_set_len(set: *const EqkPointSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.len())
}

/// Coordinates per point, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqk_point_set_dim(set: *const EqkPointSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.dim())
}

/// Claimed common distance, or NaN for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqk_point_set_distance(set: *const EqkPointSet) -> f64 {
    set.as_ref().map_or(f64::NAN, |s| s.set.claimed_distance)
}

/// Copies point `index` into `out`, which holds `len` doubles (at least the
/// set dimension).
///
/// # Safety
/// `set` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn eqk_point_set_point(
    set: *const EqkPointSet,
    index: usize,
    out: *mut f64,
    len: usize,
) -> EqkStatus {
    guard(|| {
        let set = as_ref(set, "set")?;
        let p = set.set.points.get(index).ok_or_else(|| {
            Failure(EqkStatus::Parameter, format!("index {index} out of range ({} points)", set.set.len()))
        })?;
        if len < p.len() {
            return Err(Failure(EqkStatus::Parameter, format!("buffer holds {len} doubles, need {}", p.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(p.as_ptr(), out, p.len());
        Ok(())
    })
}

/// Certifies that all pairwise `norm` distances equal the claimed distance
/// within relative tolerance `tol`. A failed certificate is not an error:
/// the call returns `EQK_STATUS_OK` with `pass = false`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eqk_certify(
    set: *const EqkPointSet,
    norm: *const EqkNorm,
    tol: f64,
    out: *mut EqkCertificate,
) -> EqkStatus {
    guard(|| {
        let set = as_ref(set, "set")?;
        let norm = as_ref(norm, "norm")?;
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Failure(EqkStatus::Parameter, format!("tolerance must be finite and >= 0, got {tol}")));
        }
        let cert = match &set.free {
            Some(free) if set.set.len() > PAIRWISE_CERT_LIMIT && norm.spec.hyperplane().is_some() => {
                verify::certify_sign_cube(&set.set, free, &norm.spec, tol)?
            }
            _ => verify::certify_equilateral(&set.set, &norm.spec, tol)?,
        };
        let summary = EqkCertificate {
            m: cert.m,
            claimed: cert.claimed,
            min_distance: cert.distances.min,
            max_distance: cert.distances.max,
            max_relative_deviation: cert.max_relative_deviation,
            tolerance: cert.tolerance,
            pass: cert.passed(),
        };
        write(out, summary, "out")
    })
}
