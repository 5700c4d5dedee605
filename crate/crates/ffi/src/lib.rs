//! C ABI for `manybody`.
//!
//! Objects are opaque handles created by `mb_*_new`/`mb_*_read`-style
//! functions and released with the matching `mb_*_free`. Every fallible
//! function returns an [`MbStatus`]; on failure a message is available from
//! [`mb_last_error`] on the same thread. Panics never cross the boundary.
//!
//! Multi-indices and modes are 0-based; tensors are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use manybody::{
    CompletionOptions, CompletionResult, DenseTensor, Error, InteractionSet, MaskedTensor, ProjectionResult,
    SolverOptions,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidTensor = 3,
    ShapeMismatch = 4,
    ZeroTensor = 5,
    Parse = 6,
    NotConverged = 7,
    SingularSystem = 8,
    Numeric = 9,
    Io = 10,
    Panic = 11,
}

/// Dense non-negative tensor.
pub struct MbTensor(DenseTensor);

/// Interaction set bound to a tensor order.
pub struct MbInteractions(InteractionSet);

/// Result of a projection.
pub struct MbProjection(ProjectionResult);

/// Result of a completion run.
pub struct MbCompletion(CompletionResult);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbSolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MbCompletionOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MbStatus {
    match e {
        Error::InvalidTensor(_) | Error::EmptyObservation | Error::ZeroEntry(_) | Error::InvalidEta { .. } => {
            MbStatus::InvalidTensor
        }
        Error::ShapeMismatch { .. } | Error::SizeMismatch { .. } => MbStatus::ShapeMismatch,
        Error::ZeroTensor | Error::NotNormalized(_) => MbStatus::ZeroTensor,
        Error::Parse { .. } => MbStatus::Parse,
        Error::NotConverged { .. } => MbStatus::NotConverged,
        Error::SingularSystem { .. } => MbStatus::SingularSystem,
        Error::Overflow | Error::SupportViolation(_) | Error::EmptyMask | Error::OffModel(_) => MbStatus::Numeric,
        Error::BadOrder(_)
        | Error::ModeOutOfRange { .. }
        | Error::BadModes(_)
        | Error::NotCyclic(_)
        | Error::InvalidOption(_) => MbStatus::InvalidArgument,
    }
}

struct Fail(MbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MbStatus::Panic
        }
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(MbStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(MbStatus::NullPointer, format!("{name} is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(MbStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MbStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(MbStatus::NullPointer, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_scalar<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(MbStatus::NullPointer, "output pointer is null".into()));
    }
    *out = value;
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize) -> Result<(), Fail> {
    if capacity < src.len() {
        return Err(Fail(
            MbStatus::InvalidArgument,
            format!("buffer holds {capacity} values, need {}", src.len()),
        ));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(Fail(MbStatus::NullPointer, "output buffer is null".into()));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn mb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ------------------------------------------------------------------ tensors

/// Creates a tensor from `order` dimensions and `len` row-major values.
///
/// # Safety
/// `dims` must point to `order` values and `values` to `len` values.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_new(
    dims: *const usize,
    order: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut MbTensor,
) -> MbStatus {
    guard(|| {
        let dims = slice_arg(dims, order, "dims")?.to_vec();
        let values = slice_arg(values, len, "values")?.to_vec();
        put(out, MbTensor(DenseTensor::new(dims, values)?))
    })
}

/// # Safety
/// `t` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_free(t: *mut MbTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_order(t: *const MbTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.order())
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_len(t: *const MbTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Copies the dimensions into `out` (room for `capacity` values).
///
/// # Safety
/// `t` must be a live handle and `out` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_dims(t: *const MbTensor, out: *mut usize, capacity: usize) -> MbStatus {
    guard(|| {
        let dims = ref_arg(t, "tensor")?.0.dims();
        if capacity < dims.len() {
            return Err(Fail(MbStatus::InvalidArgument, format!("need room for {} dims", dims.len())));
        }
        if out.is_null() {
            return Err(Fail(MbStatus::NullPointer, "output buffer is null".into()));
        }
        ptr::copy_nonoverlapping(dims.as_ptr(), out, dims.len());
        Ok(())
    })
}

/// Copies the row-major values into `out` (room for `capacity` values).
///
/// # Safety
/// `t` must be a live handle and `out` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_values(t: *const MbTensor, out: *mut f64, capacity: usize) -> MbStatus {
    guard(|| copy_out(ref_arg(t, "tensor")?.0.values(), out, capacity))
}

/// Reads a tensor file (no `nan` entries).
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_read(path: *const c_char, out: *mut *mut MbTensor) -> MbStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let t = manybody::io::read_tensor(Path::new(path)).map_err(|e| Fail(MbStatus::Io, e.to_string()))?;
        put(out, MbTensor(t))
    })
}

/// Writes a tensor file.
///
/// # Safety
/// `t` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mb_tensor_write(t: *const MbTensor, path: *const c_char) -> MbStatus {
    guard(|| {
        let t = ref_arg(t, "tensor")?;
        let path = str_arg(path, "path")?;
        manybody::io::write_tensor(Path::new(path), &t.0).map_err(|e| Fail(MbStatus::Io, e.to_string()))
    })
}

/// Contraction of random tensor-ring cores with uniform (0, 1) entries.
///
/// # Safety
/// `dims` and `ranks` must each point to `order` values.
#[no_mangle]
pub unsafe extern "C" fn mb_random_ring_tensor(
    dims: *const usize,
    ranks: *const usize,
    order: usize,
    seed: u64,
    out: *mut *mut MbTensor,
) -> MbStatus {
    guard(|| {
        let dims = slice_arg(dims, order, "dims")?;
        let ranks = slice_arg(ranks, order, "ranks")?;
        put(out, MbTensor(manybody::random_ring_tensor(dims, ranks, seed)?))
    })
}

/// Generalized KL divergence `KL(p, q)`.
///
/// # Safety
/// `p` and `q` must be live handles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_kl_divergence(p: *const MbTensor, q: *const MbTensor, out: *mut f64) -> MbStatus {
    guard(|| put_scalar(out, manybody::kl_divergence(&ref_arg(p, "p")?.0, &ref_arg(q, "q")?.0)?))
}

/// `||truth - approx||_F / ||truth||_F`.
///
/// # Safety
/// `truth` and `approx` must be live handles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_relative_error(
    truth: *const MbTensor,
    approx: *const MbTensor,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        put_scalar(
            out,
            manybody::relative_error(&ref_arg(truth, "truth")?.0, &ref_arg(approx, "approx")?.0)?,
        )
    })
}

// ------------------------------------------------------------- interactions

/// Parses interaction text (`body=2`, `cyclic`, `(1,2)(2,3)`, ...) for tensors of `order` modes.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mb_interactions_parse(
    text: *const c_char,
    order: usize,
    out: *mut *mut MbInteractions,
) -> MbStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        put(out, MbInteractions(manybody::parse_spec(text, order)?))
    })
}

/// All interactions among at most `m` modes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_interactions_m_body(order: usize, m: usize, out: *mut *mut MbInteractions) -> MbStatus {
    guard(|| put(out, MbInteractions(InteractionSet::m_body(order, m)?)))
}

/// Neighbouring-pair interactions around a ring of modes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_interactions_cyclic(order: usize, out: *mut *mut MbInteractions) -> MbStatus {
    guard(|| put(out, MbInteractions(InteractionSet::cyclic(order)?)))
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_interactions_free(s: *mut MbInteractions) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of free parameters (including the normalizer) for the given dimensions.
///
/// # Safety
/// `s` must be a live handle, `dims` must point to `order` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_interactions_count_parameters(
    s: *const MbInteractions,
    dims: *const usize,
    order: usize,
    out: *mut usize,
) -> MbStatus {
    guard(|| {
        let s = ref_arg(s, "interactions")?;
        put_scalar(out, s.0.count_parameters(slice_arg(dims, order, "dims")?)?)
    })
}

// --------------------------------------------------------------- projection

#[no_mangle]
pub extern "C" fn mb_solver_options_default() -> MbSolverOptions {
    let d = SolverOptions::default();
    MbSolverOptions {
        tolerance: d.tolerance,
        max_iterations: d.max_iterations,
        damping: d.damping,
    }
}

/// Projects `p` onto the model of `s`. `opts` may be null for defaults.
/// Hitting the iteration cap still returns `MbStatus::Ok`; check
/// [`mb_projection_converged`].
///
/// # Safety
/// `p` and `s` must be live handles; `opts` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_project(
    p: *const MbTensor,
    s: *const MbInteractions,
    opts: *const MbSolverOptions,
    out: *mut *mut MbProjection,
) -> MbStatus {
    guard(|| {
        let p = ref_arg(p, "tensor")?;
        let s = ref_arg(s, "interactions")?;
        let o = opts.as_ref().copied().unwrap_or_else(|| mb_solver_options_default());
        let opts = SolverOptions {
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
            damping: o.damping,
        };
        put(out, MbProjection(manybody::project(&p.0, &s.0, &opts)?))
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_projection_free(r: *mut MbProjection) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// New tensor handle holding the projected tensor.
///
/// # Safety
/// `r` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_projection_tensor(r: *const MbProjection, out: *mut *mut MbTensor) -> MbStatus {
    guard(|| put(out, MbTensor(ref_arg(r, "projection")?.0.tensor.clone())))
}

/// KL divergence from the input to the projection, or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_projection_kl(r: *const MbProjection) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.kl)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_projection_iterations(r: *const MbProjection) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_projection_converged(r: *const MbProjection) -> bool {
    r.as_ref().is_some_and(|r| r.0.converged)
}

/// Writes the factors of a converged projection and a manifest into directory `dir`.
///
/// # Safety
/// `r` and `s` must be live handles and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mb_projection_write_factors(
    r: *const MbProjection,
    s: *const MbInteractions,
    dir: *const c_char,
) -> MbStatus {
    guard(|| {
        let r = ref_arg(r, "projection")?;
        let s = ref_arg(s, "interactions")?;
        let dir = str_arg(dir, "dir")?;
        let f = manybody::extract_factors(&r.0, &s.0)?;
        manybody::io::write_factor_dir(Path::new(dir), &f).map_err(|e| Fail(MbStatus::Io, e.to_string()))
    })
}

// --------------------------------------------------------------- completion

#[no_mangle]
pub extern "C" fn mb_completion_options_default() -> MbCompletionOptions {
    let d = CompletionOptions::default();
    MbCompletionOptions {
        epsilon: d.epsilon,
        max_iterations: d.max_iterations,
    }
}

/// Completes a tensor whose missing entries are NaN in `values`. Missing
/// entries start at the observed mean. Either options pointer may be null.
///
/// # Safety
/// `dims` must point to `order` values and `values` to `len` values; `s` must
/// be a live handle; option pointers null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_complete(
    dims: *const usize,
    order: usize,
    values: *const f64,
    len: usize,
    s: *const MbInteractions,
    solver: *const MbSolverOptions,
    completion: *const MbCompletionOptions,
    out: *mut *mut MbCompletion,
) -> MbStatus {
    guard(|| {
        let dims = slice_arg(dims, order, "dims")?.to_vec();
        let values = slice_arg(values, len, "values")?.to_vec();
        let s = ref_arg(s, "interactions")?;
        let m = MaskedTensor::from_nan_values(dims, values)?;
        let so = solver.as_ref().copied().unwrap_or_else(|| mb_solver_options_default());
        let co = completion.as_ref().copied().unwrap_or_else(|| mb_completion_options_default());
        let popts = SolverOptions {
            tolerance: so.tolerance,
            max_iterations: so.max_iterations,
            damping: so.damping,
        };
        let copts = CompletionOptions {
            epsilon: co.epsilon,
            max_iterations: co.max_iterations,
            ..Default::default()
        };
        put(out, MbCompletion(manybody::lbtc(&m, &s.0, &popts, &copts)?))
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_completion_free(r: *mut MbCompletion) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// New tensor handle holding the completed tensor.
///
/// # Safety
/// `r` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_completion_tensor(r: *const MbCompletion, out: *mut *mut MbTensor) -> MbStatus {
    guard(|| put(out, MbTensor(ref_arg(r, "completion")?.0.tensor.clone())))
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_completion_iterations(r: *const MbCompletion) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_completion_converged(r: *const MbCompletion) -> bool {
    r.as_ref().is_some_and(|r| r.0.converged)
}

/// Copies the residual trace into `out`; `mb_completion_iterations` gives its length.
///
/// # Safety
/// `r` must be a live handle and `out` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn mb_completion_residuals(r: *const MbCompletion, out: *mut f64, capacity: usize) -> MbStatus {
    guard(|| copy_out(&ref_arg(r, "completion")?.0.residual_trace, out, capacity))
}
