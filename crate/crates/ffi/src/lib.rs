//! C interface to `wexch`.
//!
//! Every fallible call returns a [`WexchStatus`]. On failure the message is
//! kept per thread and can be fetched with [`wexch_last_error_message`].
//! Strings handed out by this library must be released with
//! [`wexch_string_free`]; weight sequences with [`wexch_weight_seq_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wexch::harness::{self, Experiment, ExperimentConfig};
use wexch::model::{total_variation, Dist, Measure, RandomSource};
use wexch::perm::{conditional_weights, log_permanent, LogMatrix};
use wexch::recovery::recover_component;
use wexch::sampler::sample_weighted_iid;
use wexch::weights::{WeightFn, WeightSeq, WeightSpec};
use wexch::{conditions, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WexchStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    InvalidConfig = 4,
    TooLarge = 5,
    /// An estimator could not produce a value from the data (no acceptances,
    /// degenerate or undefined ratios, disconnected support).
    EstimationFailed = 6,
    Io = 7,
    /// The verdict is undetermined; the JSON output is still written.
    Unknown = 8,
    /// Criteria of an experiment failed; the JSON output is still written.
    CriteriaFailed = 9,
    Panic = 10,
}

/// A weight sequence `lambda_1, lambda_2, ..` on a finite alphabet.
pub struct WexchWeightSeq {
    inner: WeightSeq,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> WexchStatus {
    match err {
        Error::TooLarge { .. } | Error::TooManySubsets { .. } => WexchStatus::TooLarge,
        Error::Config(_) | Error::Json(_) | Error::UnknownRule(_) | Error::InvalidFamily(_) => WexchStatus::InvalidConfig,
        Error::EmptyDenominator
        | Error::NoAcceptances
        | Error::DegenerateRatio { .. }
        | Error::UndefinedEdge { .. }
        | Error::DisconnectedSupport(_)
        | Error::Cancellation => WexchStatus::EstimationFailed,
        Error::Io(_) | Error::Csv(_) => WexchStatus::Io,
        _ => WexchStatus::InvalidArgument,
    }
}

struct Fail(WexchStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(WexchStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(WexchStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<WexchStatus, Fail>) -> WexchStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == WexchStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside wexch".into());
            WexchStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(WexchStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn seq_arg<'a>(p: *const WexchWeightSeq) -> Result<&'a WeightSeq, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("seq"))
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("output contains a NUL byte"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wexch_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The caller owns
/// the returned string.
#[no_mangle]
pub extern "C" fn wexch_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wexch_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a weight sequence from its JSON spec, e.g. `{"family": "binary_example"}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wexch_weight_seq_from_json(spec_json: *const c_char, out: *mut *mut WexchWeightSeq) -> WexchStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(spec_json, "spec_json")?;
        let spec: WeightSpec = serde_json::from_str(text).map_err(|e| Fail(WexchStatus::InvalidConfig, e.to_string()))?;
        let inner = spec.build()?;
        *out = Box::into_raw(Box::new(WexchWeightSeq { inner }));
        Ok(WexchStatus::Ok)
    })
}

/// # Safety
/// `seq` must be NULL or a handle from [`wexch_weight_seq_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wexch_weight_seq_free(seq: *mut WexchWeightSeq) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// # Safety
/// `seq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wexch_weight_seq_alphabet_size(seq: *const WexchWeightSeq, out: *mut usize) -> WexchStatus {
    guard(|| {
        let s = seq_arg(seq)?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.alphabet_size();
        Ok(WexchStatus::Ok)
    })
}

/// Writes `lambda_i(0..k)` (linear scale) into `out`, which holds `k` values.
///
/// # Safety
/// `seq` must be a live handle; `out` must hold `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn wexch_weight_at(seq: *const WexchWeightSeq, i: usize, out: *mut f64, k: usize) -> WexchStatus {
    guard(|| {
        let s = seq_arg(seq)?;
        if i == 0 {
            return Err(invalid("indices start at 1"));
        }
        if k != s.alphabet_size() {
            return Err(invalid(format!("output holds {k} values, alphabet has {}", s.alphabet_size())));
        }
        let out = out_slice(out, k, "out")?;
        out.copy_from_slice(&s.weight_at(i).values());
        Ok(WexchStatus::Ok)
    })
}

/// Log-permanent of the `n x n` matrix whose row-major natural-log entries are
/// in `ln_entries` (`-inf` allowed for zero entries).
///
/// # Safety
/// `ln_entries` must hold `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wexch_log_permanent(ln_entries: *const f64, n: usize, out: *mut f64) -> WexchStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or_else(|| invalid("n * n overflows"))?;
        let data = slice_arg(ln_entries, len, "ln_entries")?.to_vec();
        let m = LogMatrix::new(n, data)?;
        *out.as_mut().ok_or_else(|| null("out"))? = log_permanent(&m)?;
        Ok(WexchStatus::Ok)
    })
}

/// Conditional weights `w_{n,i}` for the observed `xs[0..n]`; `out` receives `n` values.
///
/// # Safety
/// `seq` must be a live handle; `xs` and `out` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn wexch_conditional_weights(
    seq: *const WexchWeightSeq,
    xs: *const usize,
    n: usize,
    i: usize,
    out: *mut f64,
) -> WexchStatus {
    guard(|| {
        let s = seq_arg(seq)?;
        let xs = slice_arg(xs, n, "xs")?;
        let cw = conditional_weights(&s.prefix(n), xs, i)?;
        out_slice(out, n, "out")?.copy_from_slice(&cw.w);
        Ok(WexchStatus::Ok)
    })
}

/// Condition report as JSON. `candidates` holds `count` extra reference
/// weight functions, `k` linear values each, appended to the defaults.
/// Returns [`WexchStatus::Unknown`] with the report written when the verdict is undetermined.
///
/// # Safety
/// `seq` must be a live handle; `candidates` must hold `count * k` doubles;
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wexch_check_conditions_json(
    seq: *const WexchWeightSeq,
    candidates: *const f64,
    count: usize,
    out_json: *mut *mut c_char,
) -> WexchStatus {
    guard(|| {
        let s = seq_arg(seq)?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let k = s.alphabet_size();
        let flat = slice_arg(candidates, count * k, "candidates")?;
        let mut cands = conditions::default_candidates(s);
        for c in flat.chunks(k) {
            cands.push(WeightFn::from_linear(c)?);
        }
        let report = conditions::check_conditions(s, &cands, &Default::default())?;
        let text = serde_json::to_string(&report).map_err(|e| Fail(WexchStatus::Io, e.to_string()))?;
        *out_json = into_c_string(text)?;
        Ok(if report.conclusion.is_definitive() {
            WexchStatus::Ok
        } else {
            WexchStatus::Unknown
        })
    })
}

/// Draws `X_1..X_n` from the weighted-i.i.d. law with base masses `base[0..k]`.
///
/// # Safety
/// `seq` must be a live handle; `base` must hold `k` doubles and `out` `n` values.
#[no_mangle]
pub unsafe extern "C" fn wexch_sample(
    seq: *const WexchWeightSeq,
    base: *const f64,
    k: usize,
    n: usize,
    seed: u64,
    out: *mut usize,
) -> WexchStatus {
    guard(|| {
        let s = seq_arg(seq)?;
        let base = Measure::from_linear(slice_arg(base, k, "base")?)?;
        let run = sample_weighted_iid(&base, s, n, &RandomSource::new(seed))?;
        out_slice(out, n, "out")?.copy_from_slice(&run.symbols);
        Ok(WexchStatus::Ok)
    })
}

/// Recovers the latent component from `xs[0..n]` and writes its normalized
/// base distribution into `out[0..k]`. `reference` may be NULL for all ones.
///
/// # Safety
/// `seq` must be a live handle; `xs` must hold `n` values; `reference`, when
/// not NULL, and `out` must hold `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn wexch_recover(
    seq: *const WexchWeightSeq,
    xs: *const usize,
    n: usize,
    reference: *const f64,
    out: *mut f64,
    k: usize,
) -> WexchStatus {
    guard(|| {
        let s = seq_arg(seq)?;
        if k != s.alphabet_size() {
            return Err(invalid(format!("output holds {k} values, alphabet has {}", s.alphabet_size())));
        }
        let reference = if reference.is_null() {
            WeightFn::ones(k)
        } else {
            WeightFn::from_linear(slice_arg(reference, k, "reference")?)?
        };
        let rec = recover_component(slice_arg(xs, n, "xs")?, s, &reference)?;
        out_slice(out, k, "out")?.copy_from_slice(rec.component.tilde_star.probs());
        Ok(WexchStatus::Ok)
    })
}

/// Total variation distance between two probability vectors of length `k`.
///
/// # Safety
/// `p` and `q` must hold `k` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wexch_total_variation(p: *const f64, q: *const f64, k: usize, out: *mut f64) -> WexchStatus {
    guard(|| {
        let p = Dist::new(slice_arg(p, k, "p")?.to_vec())?;
        let q = Dist::new(slice_arg(q, k, "q")?.to_vec())?;
        *out.as_mut().ok_or_else(|| null("out"))? = total_variation(&p, &q)?;
        Ok(WexchStatus::Ok)
    })
}

/// Runs a CLI experiment (`"verify"`, `"lln"`, ..) on a JSON config and
/// returns the full result as JSON.
///
/// # Safety
/// `experiment` and `config_json` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wexch_run_experiment(
    experiment: *const c_char,
    config_json: *const c_char,
    seed_offset: u64,
    out_json: *mut *mut c_char,
) -> WexchStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let name = str_arg(experiment, "experiment")?;
        let exp: Experiment = serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Fail(WexchStatus::InvalidConfig, format!("unknown experiment `{name}`")))?;
        let config = ExperimentConfig::from_json(str_arg(config_json, "config_json")?)?;
        let outcome = harness::run(exp, config, seed_offset)?;
        let text = serde_json::to_string(&outcome.result).map_err(|e| Fail(WexchStatus::Io, e.to_string()))?;
        *out_json = into_c_string(text)?;
        Ok(match outcome.status {
            harness::ExitStatus::Pass => WexchStatus::Ok,
            harness::ExitStatus::Unknown => WexchStatus::Unknown,
            harness::ExitStatus::CriteriaFailed => WexchStatus::CriteriaFailed,
            harness::ExitStatus::Error => WexchStatus::InvalidArgument,
        })
    })
}
