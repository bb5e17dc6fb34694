//! C interface to the hybrid-bem solver.
//!
//! Configurations and results are opaque handles owned by the caller and
//! released with their `_free` functions. Every call returns an
//! [`HbemStatus`]; on failure the message is available from
//! [`hbem_last_error_message`] on the same thread. Strings are UTF-8 and
//! NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hybrid_bem::experiment::{self, ExperimentConfig, ExperimentResult};
use hybrid_bem::postprocess;
use hybrid_bem::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HbemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The domain or a singular disc is geometrically invalid.
    Geometry = 3,
    /// Quadrature, factorization or fitting failed.
    Numerical = 4,
    Io = 5,
    /// A requested index does not exist.
    OutOfRange = 6,
    /// The buffer passed in is too short; nothing was written.
    BufferTooSmall = 7,
    Panic = 8,
}

/// Capacitance summary of a result. Quantities a method does not produce
/// are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HbemCapacitance {
    pub c_arc: f64,
    pub c_segment: f64,
    pub c_total: f64,
    pub c_corrected: f64,
    pub e_percent: f64,
    pub e_arc_percent: f64,
    pub e_corrected_percent: f64,
    pub cond_estimate: f64,
    pub ill_conditioned: bool,
}

/// Opaque experiment configuration.
pub struct HbemConfig(ExperimentConfig);

/// Opaque experiment result.
pub struct HbemResult(ExperimentResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> HbemStatus {
    match e {
        Error::InvalidSegment { .. }
        | Error::OpenBoundary(_)
        | Error::InvalidSingularity { .. }
        | Error::ArcOutsideDomain { .. }
        | Error::OverlappingSubdomains { .. } => HbemStatus::Geometry,
        Error::Io(_) => HbemStatus::Io,
        e if e.is_numerical() => HbemStatus::Numerical,
        _ => HbemStatus::InvalidArgument,
    }
}

fn fail(status: HbemStatus, message: impl Into<String>) -> HbemStatus {
    set_error(message);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (HbemStatus, String)>) -> HbemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HbemStatus::Ok
        }
        Ok(Err((status, message))) => fail(status, message),
        Err(_) => fail(HbemStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (HbemStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HbemStatus, String) {
    (HbemStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HbemStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (HbemStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Copies the last error message of this thread into `buffer` (truncated and
/// NUL-terminated) and returns the full message length in bytes, excluding
/// the terminator. Returns 0 when the last call succeeded.
///
/// # Safety
/// `buffer` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hbem_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buffer.is_null() && capacity > 0 {
                *buffer = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// New configuration with the default settings (single-singularity Motz
/// problem, hybrid method, N = 500, R = 0.1, two terms, linear elements).
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_config_new(out: *mut *mut HbemConfig) -> HbemStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(HbemConfig(ExperimentConfig::default())));
        Ok(())
    })
}

/// Configuration from a JSON object; missing fields take their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_config_from_json(json: *const c_char, out: *mut *mut HbemConfig) -> HbemStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| lib_err(Error::from(e)))?;
        *out = Box::into_raw(Box::new(HbemConfig(config)));
        Ok(())
    })
}

/// Named built-in setting such as `"table1"` or `"fig6"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_config_from_preset(name: *const c_char, out: *mut *mut HbemConfig) -> HbemStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let preset = experiment::preset(str_arg(name, "name")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HbemConfig(preset.config)));
        Ok(())
    })
}

/// Sets one field from a JSON value, e.g. `("r", "0.3")` or
/// `("method", "\"bem\"")`. The configuration is unchanged on failure.
///
/// # Safety
/// `config` must come from this library; `key` and `json_value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn hbem_config_set(
    config: *mut HbemConfig,
    key: *const c_char,
    json_value: *const c_char,
) -> HbemStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        let key = str_arg(key, "key")?;
        let value: serde_json::Value = serde_json::from_str(str_arg(json_value, "json_value")?)
            .map_err(|e| lib_err(Error::from(e)))?;
        let mut object = serde_json::to_value(&config.0).map_err(|e| lib_err(Error::from(e)))?;
        let fields = object.as_object_mut().expect("configuration serializes to an object");
        if !fields.contains_key(key) {
            return Err((HbemStatus::InvalidArgument, format!("unknown configuration field {key:?}")));
        }
        fields.insert(key.to_string(), value);
        config.0 = serde_json::from_value(object).map_err(|e| lib_err(Error::from(e)))?;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hbem_config_free(config: *mut HbemConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the experiment described by `config`.
///
/// # Safety
/// `config` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_run(config: *const HbemConfig, out: *mut *mut HbemResult) -> HbemStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let result = experiment::run(&config.0).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HbemResult(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hbem_result_free(result: *mut HbemResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of coefficients of expansion `expansion` (0 for the singular
/// point at the origin, 1 for the corner of the two-singularity problem).
///
/// # Safety
/// `result` must come from this library and `count` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_result_alpha_count(
    result: *const HbemResult,
    expansion: usize,
    count: *mut usize,
) -> HbemStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = alphas(&result.0, expansion)?.len();
        Ok(())
    })
}

fn alphas(r: &ExperimentResult, expansion: usize) -> Result<&[f64], (HbemStatus, String)> {
    match expansion {
        0 => Ok(&r.alpha),
        1 => Ok(&r.alpha2),
        _ => Err((HbemStatus::OutOfRange, format!("no expansion {expansion}"))),
    }
}

/// Copies the coefficients of `expansion` into `buffer`, which must hold at
/// least the count reported by [`hbem_result_alpha_count`].
///
/// # Safety
/// `result` must come from this library and `buffer` point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hbem_result_alpha(
    result: *const HbemResult,
    expansion: usize,
    buffer: *mut f64,
    capacity: usize,
) -> HbemStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let values = alphas(&result.0, expansion)?;
        if values.is_empty() {
            return Ok(());
        }
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if capacity < values.len() {
            return Err((
                HbemStatus::BufferTooSmall,
                format!("{} coefficients for a buffer of {capacity}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_result_capacitance(
    result: *const HbemResult,
    out: *mut HbemCapacitance,
) -> HbemStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(|| null("result"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = HbemCapacitance {
            c_arc: opt(r.c_arc),
            c_segment: opt(r.c_segment),
            c_total: opt(r.c_total),
            c_corrected: opt(r.c_corrected),
            e_percent: opt(r.e_percent),
            e_arc_percent: opt(r.e_arc_percent),
            e_corrected_percent: opt(r.e_corrected_percent),
            cond_estimate: opt(r.cond_estimate),
            ill_conditioned: r.ill_conditioned,
        };
        Ok(())
    })
}

/// The full result as a JSON object. Release the string with
/// [`hbem_string_free`].
///
/// # Safety
/// `result` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_result_to_json(result: *const HbemResult, out: *mut *mut c_char) -> HbemStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(|| null("result"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(r).map_err(|e| lib_err(Error::from(e)))?;
        *out = CString::new(text)
            .map_err(|e| (HbemStatus::InvalidArgument, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn hbem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Flux weight of the `l`-th Motz coefficient (`l >= 1`) through the
/// Dirichlet leg of a disc of radius `r`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_k_weight(l: usize, r: f64, out: *mut f64) -> HbemStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if l == 0 {
            return Err((HbemStatus::InvalidArgument, "terms are numbered from 1".into()));
        }
        if !(r >= 0.0) {
            return Err((HbemStatus::InvalidArgument, format!("radius must be non-negative, got {r}")));
        }
        *out = postprocess::k_weight(l, r);
        Ok(())
    })
}

/// Flux through the Dirichlet leg of radius `r` carried by the exact Motz
/// coefficients.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hbem_motz_exact_capacitance(r: f64, out: *mut f64) -> HbemStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(r >= 0.0) {
            return Err((HbemStatus::InvalidArgument, format!("radius must be non-negative, got {r}")));
        }
        *out = postprocess::motz_exact_capacitance(r);
        Ok(())
    })
}
