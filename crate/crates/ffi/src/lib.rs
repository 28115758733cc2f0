//! C ABI over `recipbp`.
//!
//! Models live behind the opaque `RecipModel` handle. Every entry point
//! returns a `RecipStatus`; on failure the message is available from
//! `recip_last_error_message` on the same thread until the next call.
//! Belief outputs are written row-major as `num_nodes x alphabet_size`
//! doubles into caller-owned buffers.
//!
//! Strings returned through `char **` are owned by the library and must be
//! released with `recip_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DVector;
use recipbp::bp::{bp_run, compute_beliefs, default_t_max, init_messages, steady_state_beliefs_eigen, BpOptions, InitMode, DEFAULT_TOL};
use recipbp::diagnostics::{binary_correction, diagnose_model};
use recipbp::exact::exact_marginals_transfer;
use recipbp::hilbert::hilbert_distance_orthant;
use recipbp::io::parse_model;
use recipbp::{BeliefSet, Error, ErrorKind, HiddenReciprocalModel};

/// Status codes. The first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecipStatus {
    Ok = 0,
    Validation = 1,
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque model handle.
pub struct RecipModel {
    inner: HiddenReciprocalModel,
}

/// Options for `recip_smooth`. Obtain defaults from `recip_bp_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RecipBpOptions {
    pub tol: f64,
    pub t_max: usize,
    /// Nonzero to normalize messages after every update.
    pub normalize: c_int,
    /// Nonzero for seeded random initial messages, zero for uniform.
    pub random_init: c_int,
    pub seed: u64,
}

/// Outcome of `recip_smooth`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RecipBpResult {
    pub sweeps: usize,
    pub converged: c_int,
    /// Hilbert distance moved in the last sweep.
    pub last_change: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Buffer { needed: usize, given: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(f: Failure) -> RecipStatus {
    match f {
        Failure::Lib(e) => {
            set_last_error(e.to_string());
            match e.kind() {
                ErrorKind::Validation => RecipStatus::Validation,
                ErrorKind::Numerical => RecipStatus::Numerical,
                ErrorKind::Io => RecipStatus::Io,
            }
        }
        Failure::Null(what) => {
            set_last_error(format!("null pointer passed for `{what}`"));
            RecipStatus::NullPointer
        }
        Failure::Buffer { needed, given } => {
            set_last_error(format!("output buffer holds {given} values, {needed} needed"));
            RecipStatus::BufferTooSmall
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RecipStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RecipStatus::Ok,
        Ok(Err(e)) => status_of(e),
        Err(_) => {
            set_last_error("internal panic".into());
            RecipStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const RecipModel) -> Result<&'a HiddenReciprocalModel, Failure> {
    model.as_ref().map(|m| &m.inner).ok_or(Failure::Null("model"))
}

unsafe fn write_beliefs(b: &BeliefSet, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    let d = b.get(0).len();
    let needed = b.num_nodes() * d;
    if len < needed {
        return Err(Failure::Buffer { needed, given: len });
    }
    let dst = std::slice::from_raw_parts_mut(out, needed);
    for k in 0..b.num_nodes() {
        dst[k * d..(k + 1) * d].copy_from_slice(b.get(k).as_slice());
    }
    Ok(())
}

/// Parses and validates a JSON model. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_model_from_json(json: *const c_char, out: *mut *mut RecipModel) -> RecipStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::Schema { path: ".".into(), message: format!("input is not UTF-8: {e}") })?;
        let model = parse_model(text)?;
        *out = Box::into_raw(Box::new(RecipModel { inner: model }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from `recip_model_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn recip_model_free(model: *mut RecipModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_model_num_nodes(model: *const RecipModel, out: *mut usize) -> RecipStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or(Failure::Null("out"))? = m.num_nodes();
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_model_alphabet_size(model: *const RecipModel, out: *mut usize) -> RecipStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or(Failure::Null("out"))? = m.alphabet_size();
        Ok(())
    })
}

/// Default options for a model: tolerance 1e-10, sweep budget 10 L D^2,
/// normalized messages, uniform start.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_bp_options_default(model: *const RecipModel, out: *mut RecipBpOptions) -> RecipStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or(Failure::Null("out"))? = RecipBpOptions {
            tol: DEFAULT_TOL,
            t_max: default_t_max(m),
            normalize: 1,
            random_init: 0,
            seed: 0,
        };
        Ok(())
    })
}

/// Runs loopy BP and writes the beliefs. `result` may be null.
///
/// # Safety
/// `model` must be a live handle, `beliefs` must hold `len` doubles and
/// `result`, when non-null, must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_smooth(
    model: *const RecipModel,
    options: RecipBpOptions,
    beliefs: *mut f64,
    len: usize,
    result: *mut RecipBpResult,
) -> RecipStatus {
    guard(|| {
        let m = model_ref(model)?;
        let mode = if options.random_init != 0 {
            InitMode::SeededRandom(options.seed)
        } else {
            InitMode::Uniform
        };
        let opts = BpOptions {
            tol: options.tol,
            t_max: options.t_max,
            normalize: options.normalize != 0,
        };
        let run = bp_run(m, &init_messages(m, mode), opts)?;
        write_beliefs(&compute_beliefs(m, &run.messages)?, beliefs, len)?;
        if let Some(r) = result.as_mut() {
            *r = RecipBpResult {
                sweeps: run.messages.t,
                converged: c_int::from(run.converged),
                last_change: run.trace.last().copied().unwrap_or(f64::INFINITY),
            };
        }
        Ok(())
    })
}

/// Exact marginals by transfer matrices.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn recip_exact_marginals(model: *const RecipModel, out: *mut f64, len: usize) -> RecipStatus {
    guard(|| write_beliefs(&exact_marginals_transfer(model_ref(model)?)?, out, len))
}

/// BP fixed-point beliefs from the Perron vectors of the loop matrices.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn recip_steady_state_beliefs(model: *const RecipModel, out: *mut f64, len: usize) -> RecipStatus {
    guard(|| write_beliefs(&steady_state_beliefs_eigen(model_ref(model)?)?, out, len))
}

/// Corrected posteriors for a binary model. Fails with
/// `RECIP_STATUS_VALIDATION` when the alphabet is not binary.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn recip_binary_correction(model: *const RecipModel, out: *mut f64, len: usize) -> RecipStatus {
    guard(|| {
        let m = model_ref(model)?;
        let rows = (0..m.num_nodes())
            .map(|k| binary_correction(m, k).map(|c| DVector::from_vec(c.corrected)))
            .collect::<recipbp::Result<Vec<_>>>()?;
        write_beliefs(&BeliefSet::new(rows), out, len)
    })
}

/// Hilbert distance between two strictly positive vectors of length `n`.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_hilbert_distance(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> RecipStatus {
    guard(|| {
        if x.is_null() {
            return Err(Failure::Null("x"));
        }
        if y.is_null() {
            return Err(Failure::Null("y"));
        }
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        let xv = DVector::from_row_slice(std::slice::from_raw_parts(x, n));
        let yv = DVector::from_row_slice(std::slice::from_raw_parts(y, n));
        *out = hilbert_distance_orthant(&xv, &yv)?;
        Ok(())
    })
}

/// Full diagnostics report as JSON. Free `*out` with `recip_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn recip_diagnose_json(model: *const RecipModel, out: *mut *mut c_char) -> RecipStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let report = diagnose_model(model_ref(model)?)?;
        let text = serde_json::to_string(&report).expect("report serializes");
        *out = CString::new(text).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn recip_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn recip_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
