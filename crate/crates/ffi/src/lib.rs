//! C ABI for `supercode`.
//!
//! Every fallible function returns a [`SupercodeStatus`] and writes its
//! result through an out-pointer. On failure the message is available from
//! [`supercode_last_error`] on the same thread until the next call into
//! the library. Objects are opaque handles created by `*_new`/`*_build`
//! and released with the matching `*_free`; strings returned by the
//! library are released with [`supercode_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use supercode::quantizer::{self, Codebook};
use supercode::simulator::{self, CodebookPolicy, Mode, PointStreams};
use supercode::theory::{self, SystemParams};
use supercode::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupercodeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    AboveCapacity = 3,
    Domain = 4,
    Resource = 5,
    Usage = 6,
    Io = 7,
    Panic = 8,
}

pub const SUPERCODE_MODE_FULL: u32 = 0;
pub const SUPERCODE_MODE_GENIE: u32 = 1;
pub const SUPERCODE_MODE_UNCODED: u32 = 2;

pub const SUPERCODE_POLICY_FIXED: u32 = 0;
pub const SUPERCODE_POLICY_FRESH_PER_TRIAL: u32 = 1;

/// Returned by [`supercode_quantize`] when no codeword is admissible.
pub const SUPERCODE_NO_CODEWORD: i64 = -1;

/// Opaque system parameters.
pub struct SupercodeParams {
    inner: SystemParams,
}

/// Opaque spherical codebook.
pub struct SupercodeCodebook {
    inner: Codebook,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SupercodeCoefficients {
    pub alpha: f64,
    pub beta: f64,
    /// Quantization distortion `sigma2 2^(-2 rho)`.
    pub delta_q: f64,
    pub gamma: f64,
    /// Per-symbol squared codeword radius.
    pub radius2: f64,
    pub target_cos: f64,
}

/// Headline numbers of a simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SupercodeRunSummary {
    pub num_trials: usize,
    pub codebook_size: usize,
    pub mean_distortion: f64,
    pub stderr_distortion: f64,
    pub genie_mean_distortion: f64,
    pub mean_power: f64,
    pub encode_failure_rate: f64,
    pub decode_error_rate: f64,
    pub mean_quant_error: f64,
    pub optimal_distortion: f64,
    pub distortion_at_rho: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> SupercodeStatus {
    match err {
        Error::Parameter { .. } => SupercodeStatus::InvalidParameter,
        Error::AboveCapacity { .. } => SupercodeStatus::AboveCapacity,
        Error::Domain(_) => SupercodeStatus::Domain,
        Error::Resource(_) => SupercodeStatus::Resource,
        Error::Usage(_) => SupercodeStatus::Usage,
        Error::Io(_) => SupercodeStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SupercodeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SupercodeStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            SupercodeStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SupercodeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn mode_from(mode: u32) -> Result<Mode, Failure> {
    match mode {
        SUPERCODE_MODE_FULL => Ok(Mode::Full),
        SUPERCODE_MODE_GENIE => Ok(Mode::Genie),
        SUPERCODE_MODE_UNCODED => Ok(Mode::Uncoded),
        m => Err(Error::Usage(format!("unknown mode {m}")).into()),
    }
}

fn policy_from(policy: u32) -> Result<CodebookPolicy, Failure> {
    match policy {
        SUPERCODE_POLICY_FIXED => Ok(CodebookPolicy::Fixed),
        SUPERCODE_POLICY_FRESH_PER_TRIAL => Ok(CodebookPolicy::FreshPerTrial),
        p => Err(Error::Usage(format!("unknown codebook policy {p}")).into()),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn supercode_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn supercode_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_capacity(power: f64, noise: f64, out: *mut f64) -> SupercodeStatus {
    guard(|| {
        *self::out(out, "out")? = theory::capacity(power, noise)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_distortion_rate(sigma2: f64, rate: f64, out: *mut f64) -> SupercodeStatus {
    guard(|| {
        *self::out(out, "out")? = theory::distortion_rate(sigma2, rate)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_optimal_distortion(
    sigma2: f64,
    power: f64,
    noise: f64,
    out: *mut f64,
) -> SupercodeStatus {
    guard(|| {
        *self::out(out, "out")? = theory::optimal_distortion(sigma2, power, noise)?;
        Ok(())
    })
}

/// Validated parameters with the default encoder tolerance, `delta = 0`
/// and seed 0.
///
/// # Safety
/// `out` must be NULL or valid for writes. On success `*out` owns a handle
/// to be released with [`supercode_params_free`].
#[no_mangle]
pub unsafe extern "C" fn supercode_params_new(
    sigma2: f64,
    power: f64,
    noise: f64,
    rho: f64,
    n: usize,
    out: *mut *mut SupercodeParams,
) -> SupercodeStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let inner = SystemParams::new(sigma2, power, noise, rho, n);
        inner.validate()?;
        *slot = Box::into_raw(Box::new(SupercodeParams { inner }));
        Ok(())
    })
}

/// # Safety
/// `params` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_params_free(params: *mut SupercodeParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn update_params(params: *mut SupercodeParams, f: impl FnOnce(SystemParams) -> SystemParams) -> SupercodeStatus {
    guard(|| {
        let p = out(params, "params")?;
        let next = f(p.inner);
        next.validate()?;
        p.inner = next;
        Ok(())
    })
}

/// Encoder cosine tolerance. The handle is unchanged on failure.
///
/// # Safety
/// `params` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_params_set_epsilon(params: *mut SupercodeParams, epsilon: f64) -> SupercodeStatus {
    update_params(params, |p| p.with_epsilon(epsilon))
}

/// Codeword sphere shrink factor in `[0, 1)`.
///
/// # Safety
/// `params` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_params_set_delta(params: *mut SupercodeParams, delta: f64) -> SupercodeStatus {
    update_params(params, |p| p.with_delta(delta))
}

/// # Safety
/// `params` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_params_set_seed(params: *mut SupercodeParams, seed: u64) -> SupercodeStatus {
    update_params(params, |p| p.with_seed(seed))
}

/// # Safety
/// `params` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_coefficients(
    params: *const SupercodeParams,
    out: *mut SupercodeCoefficients,
) -> SupercodeStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = self::out(out, "out")?;
        let c = theory::coefficients(&p.inner)?;
        *slot = SupercodeCoefficients {
            alpha: c.alpha,
            beta: c.beta,
            delta_q: c.delta_q,
            gamma: c.gamma,
            radius2: c.radius2,
            target_cos: c.target_cos,
        };
        Ok(())
    })
}

/// The codebook a fixed-codebook simulation with these parameters uses.
///
/// # Safety
/// `params` must be NULL or a live handle; `out` NULL or valid for writes.
/// On success `*out` must be released with [`supercode_codebook_free`].
#[no_mangle]
pub unsafe extern "C" fn supercode_codebook_build(
    params: *const SupercodeParams,
    out: *mut *mut SupercodeCodebook,
) -> SupercodeStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let slot = self::out(out, "out")?;
        let c = theory::coefficients(p)?;
        let mut rng = PointStreams::new(p.seed, p.rho, p.n).codebook(None);
        let inner = quantizer::build_codebook(p.n, p.rho, c.radius2, &mut rng)?;
        *slot = Box::into_raw(Box::new(SupercodeCodebook { inner }));
        Ok(())
    })
}

/// # Safety
/// `cb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_codebook_free(cb: *mut SupercodeCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Number of codewords; 0 for NULL.
///
/// # Safety
/// `cb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_codebook_len(cb: *const SupercodeCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.inner.len())
}

/// Blocklength; 0 for NULL.
///
/// # Safety
/// `cb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn supercode_codebook_dim(cb: *const SupercodeCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.inner.dim())
}

/// Copies codeword `index` into `buf`, which must hold `len == dim` values.
///
/// # Safety
/// `cb` must be NULL or a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_codebook_codeword(
    cb: *const SupercodeCodebook,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> SupercodeStatus {
    guard(|| {
        let cb = &deref(cb, "codebook")?.inner;
        if index >= cb.len() {
            return Err(Error::Usage(format!("codeword index {index} out of range 0..{}", cb.len())).into());
        }
        if len != cb.dim() {
            return Err(Error::Usage(format!("buffer holds {len} values, codewords have {}", cb.dim())).into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(cb.codeword(index));
        Ok(())
    })
}

/// Typical-angle quantization of `s`: picks uniformly (stream seeded by
/// `seed`) among codewords with `|cos - target_cos| <= epsilon`. Writes
/// [`SUPERCODE_NO_CODEWORD`] when none qualifies.
///
/// # Safety
/// `cb` must be NULL or a live handle; `s` valid for `len` reads; `out`
/// NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_quantize(
    cb: *const SupercodeCodebook,
    s: *const f64,
    len: usize,
    target_cos: f64,
    epsilon: f64,
    seed: u64,
    out: *mut i64,
) -> SupercodeStatus {
    guard(|| {
        let cb = &deref(cb, "codebook")?.inner;
        let s = slice(s, len, "s")?;
        let slot = self::out(out, "out")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = quantizer::quantize(s, cb, target_cos, epsilon, &mut rng)?;
        *slot = outcome.index.map_or(SUPERCODE_NO_CODEWORD, |i| i as i64);
        Ok(())
    })
}

/// Minimum-angle decoding of `y`; lowest index on ties.
///
/// # Safety
/// `cb` must be NULL or a live handle; `y` valid for `len` reads; `out`
/// NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_decode(
    cb: *const SupercodeCodebook,
    y: *const f64,
    len: usize,
    out: *mut usize,
) -> SupercodeStatus {
    guard(|| {
        let cb = &deref(cb, "codebook")?.inner;
        let y = slice(y, len, "y")?;
        let slot = self::out(out, "out")?;
        if len != cb.dim() {
            return Err(Error::Usage(format!("received block has length {len}, codewords have {}", cb.dim())).into());
        }
        *slot = supercode::decode_codeword(y, cb);
        Ok(())
    })
}

/// Runs a simulation. `report_json` may be NULL; otherwise it receives the
/// full report as a JSON string owned by the caller.
///
/// # Safety
/// `params` must be NULL or a live handle; `summary` NULL or valid for
/// writes; `report_json` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn supercode_run(
    params: *const SupercodeParams,
    num_trials: usize,
    mode: u32,
    policy: u32,
    summary: *mut SupercodeRunSummary,
    report_json: *mut *mut c_char,
) -> SupercodeStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let slot = out(summary, "summary")?;
        let report = simulator::run(p, num_trials, mode_from(mode)?, policy_from(policy)?)?;
        *slot = SupercodeRunSummary {
            num_trials: report.num_trials,
            codebook_size: report.codebook_size,
            mean_distortion: report.mean_distortion,
            stderr_distortion: report.stderr_distortion,
            genie_mean_distortion: report.genie_mean_distortion,
            mean_power: report.mean_power,
            encode_failure_rate: report.encode_failure_rate,
            decode_error_rate: report.decode_error_rate,
            mean_quant_error: report.mean_quant_error,
            optimal_distortion: report.theory.optimal_distortion,
            distortion_at_rho: report.theory.distortion_at_rho,
        };
        if let Some(dst) = report_json.as_mut() {
            let text = supercode::output::report_json(&report, None)?;
            *dst = CString::new(text).map_err(|e| Error::Usage(e.to_string()))?.into_raw();
        }
        Ok(())
    })
}
