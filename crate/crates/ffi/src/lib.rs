//! C interface to spectral-lab. Objects cross the boundary as opaque
//! handles; every call returns an `SlStatus` and leaves a message for
//! `sl_last_error` on failure. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use spectral_lab::basis::{build_hermite_basis, build_landau_basis};
use spectral_lab::config::ExperimentConfig;
use spectral_lab::eigen::{eigenvalues, Spectrum};
use spectral_lab::operator::{assemble_full, assemble_p0, Discretization, Model, OperatorMatrix};
use spectral_lab::phase_space::{eval_lambda, EscapeFunctionParams};
use spectral_lab::potential::PotentialSpec;
use spectral_lab::runner::{error_code, run_in, Command};
use spectral_lab::{Error, Verdict};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NoConvergence = 3,
    VerdictFail = 4,
    Io = 5,
    Panic = 6,
    OutOfRange = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlVerdict {
    Pass = 0,
    PassVacuous = 1,
    Fail = 2,
    Flagged = 3,
}

impl From<Verdict> for SlVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => SlVerdict::Pass,
            Verdict::PassVacuous => SlVerdict::PassVacuous,
            Verdict::Fail => SlVerdict::Fail,
            Verdict::Flagged => SlVerdict::Flagged,
        }
    }
}

/// Truncated basis with its quadrature grid.
pub struct SlBasis {
    disc: Discretization,
    model: Model,
}

pub struct SlOperator {
    op: OperatorMatrix,
}

pub struct SlSpectrum {
    spectrum: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SlStatus {
    set_error(&e.to_string());
    match error_code(e) {
        2 => SlStatus::InvalidInput,
        3 => SlStatus::NoConvergence,
        _ => SlStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            SlStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return SlStatus::NullPointer;
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn put<T>(out: *mut *mut T, value: T) -> SlStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    SlStatus::Ok
}

/// Hermite tensor basis in `dim` = 1 or 2 dimensions.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sl_basis_hermite(dim: usize, modes: usize, length_scale: f64, out: *mut *mut SlBasis) -> SlStatus {
    non_null!(out);
    guard(|| match build_hermite_basis(dim, modes, length_scale).and_then(|(b, g)| Discretization::new(b, g)) {
        Ok(disc) => put(out, SlBasis { disc, model: Model::Oscillator { n: dim } }),
        Err(e) => status_of(&e),
    })
}

/// Landau basis in the symmetric gauge.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sl_basis_landau(
    b0: f64,
    max_level: usize,
    max_angular: usize,
    out: *mut *mut SlBasis,
) -> SlStatus {
    non_null!(out);
    guard(|| match build_landau_basis(b0, max_level, max_angular).and_then(|(b, g)| Discretization::new(b, g)) {
        Ok(disc) => put(out, SlBasis { disc, model: Model::Landau { b0 } }),
        Err(e) => status_of(&e),
    })
}

/// Number of basis functions, 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle from `sl_basis_*`.
#[no_mangle]
pub unsafe extern "C" fn sl_basis_size(basis: *const SlBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.disc.size())
}

/// # Safety
/// `basis` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sl_basis_free(basis: *mut SlBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Unperturbed operator of the basis model.
///
/// # Safety
/// `basis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_p0(basis: *const SlBasis, out: *mut *mut SlOperator) -> SlStatus {
    non_null!(basis, out);
    let b = &*basis;
    guard(|| put(out, SlOperator { op: assemble_p0(&b.disc.basis) }))
}

/// P₀ + V₁ with V₁ = (v1_re + i v1_im) exp(−|x|²/width²).
///
/// # Safety
/// `basis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_full(
    basis: *const SlBasis,
    v1_re: f64,
    v1_im: f64,
    width: f64,
    out: *mut *mut SlOperator,
) -> SlStatus {
    non_null!(basis, out);
    let b = &*basis;
    guard(|| {
        let v1 = PotentialSpec::gaussian(Complex64::new(v1_re, v1_im), width);
        match assemble_full(&b.model, &PotentialSpec::zero(), &PotentialSpec::zero(), &v1, &b.disc) {
            Ok(op) => put(out, SlOperator { op }),
            Err(e) => status_of(&e),
        }
    })
}

/// Matrix dimension, 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_dim(op: *const SlOperator) -> usize {
    op.as_ref().map_or(0, |o| o.op.dim())
}

/// Copy the entries row-major into `re` and `im`, each of length `len`
/// (at least dim²).
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_entries(op: *const SlOperator, re: *mut f64, im: *mut f64, len: usize) -> SlStatus {
    non_null!(op, re, im);
    let o = &*op;
    let n = o.op.dim();
    if len < n * n {
        set_error(&format!("buffer holds {len} entries, need {}", n * n));
        return SlStatus::OutOfRange;
    }
    let re = std::slice::from_raw_parts_mut(re, len);
    let im = std::slice::from_raw_parts_mut(im, len);
    for (k, v) in o.op.entries.iter().enumerate() {
        re[k] = v.re;
        im[k] = v.im;
    }
    SlStatus::Ok
}

/// # Safety
/// `op` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_free(op: *mut SlOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Eigenvalues (with residuals) of an operator.
///
/// # Safety
/// `op` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_eigenvalues(op: *const SlOperator, out: *mut *mut SlSpectrum) -> SlStatus {
    non_null!(op, out);
    let o = &*op;
    guard(|| match eigenvalues(&o.op) {
        Ok(spectrum) => put(out, SlSpectrum { spectrum }),
        Err(e) => status_of(&e),
    })
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_spectrum_len(spec: *const SlSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.spectrum.len())
}

/// Eigenvalue `index` in spectral order (real part, then imaginary part).
///
/// # Safety
/// `spec` must be a live handle; `re`, `im` and `residual` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_spectrum_get(
    spec: *const SlSpectrum,
    index: usize,
    re: *mut f64,
    im: *mut f64,
    residual: *mut f64,
) -> SlStatus {
    non_null!(spec, re, im, residual);
    let s = &(*spec).spectrum;
    if index >= s.len() {
        set_error(&format!("index {index} out of range for {} eigenvalues", s.len()));
        return SlStatus::OutOfRange;
    }
    *re = s.eigenvalues[index].re;
    *im = s.eigenvalues[index].im;
    *residual = s.residuals[index];
    SlStatus::Ok
}

/// # Safety
/// `spec` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sl_spectrum_free(spec: *mut SlSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Escape function λ(x, ξ) for `n`-vectors `x` and `xi`.
///
/// # Safety
/// `x` and `xi` must point to `n` readable doubles, `out` to one writable.
#[no_mangle]
pub unsafe extern "C" fn sl_eval_lambda(
    x: *const f64,
    xi: *const f64,
    n: usize,
    m0: f64,
    mu: f64,
    delta: f64,
    out: *mut f64,
) -> SlStatus {
    non_null!(x, xi, out);
    let params = EscapeFunctionParams { m0, mu, delta };
    if let Err(e) = params.validate() {
        return status_of(&e);
    }
    if n == 0 {
        set_error("phase points need n >= 1");
        return SlStatus::InvalidInput;
    }
    let (xs, es) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(xi, n));
    guard(|| {
        *out = eval_lambda(xs, es, &params);
        SlStatus::Ok
    })
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, SlStatus> {
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string arguments must be UTF-8");
        SlStatus::InvalidInput
    })
}

/// Run a CLI subcommand (e.g. "spectrum") on a TOML config, writing
/// outputs under `out_dir`. The verdict is stored in `verdict`; a FAIL
/// verdict also returns `SL_STATUS_VERDICT_FAIL`.
///
/// # Safety
/// `command`, `config_toml` and `out_dir` must be NUL-terminated strings;
/// `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_run(
    command: *const c_char,
    config_toml: *const c_char,
    out_dir: *const c_char,
    verdict: *mut SlVerdict,
) -> SlStatus {
    non_null!(command, config_toml, out_dir, verdict);
    let (cmd, text, dir) = match (read_str(command), read_str(config_toml), read_str(out_dir)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
    };
    let Some(cmd) = Command::from_name(cmd) else {
        set_error(&format!("unknown command `{cmd}`"));
        return SlStatus::InvalidInput;
    };
    guard(|| {
        let res = ExperimentConfig::from_toml_str(text, &[]).and_then(|cfg| run_in(cmd, &cfg, Path::new(dir)));
        match res {
            Ok(o) => {
                *verdict = o.verdict.into();
                if o.verdict == Verdict::Fail {
                    set_error(&o.verdict_line());
                    SlStatus::VerdictFail
                } else {
                    SlStatus::Ok
                }
            }
            Err(e) => status_of(&e),
        }
    })
}
