//! C ABI for `wavedens`.
//!
//! Every function returns a [`WdStatus`]; on failure a message is available
//! from [`wd_last_error_message`] on the same thread. Handles are opaque and
//! owned by the caller until passed to the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use wavedens::harness::make_basis;
use wavedens::pipeline::{fit_auto, PipelineConfig, Scaling};
use wavedens::selection::{resolution_curves, Criterion, ResolutionBounds};
use wavedens::threshold::RuleKind;
use wavedens::{build_neighbors, fit, Error, ModelFile, SampleSet, WaveletBasis, WaveletFamily};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Data = 3,
    Numeric = 4,
    Io = 5,
    Panic = 6,
}

pub const WD_CRITERION_NORMALIZED: i32 = 0;
pub const WD_CRITERION_UNNORMALIZED: i32 = 1;

pub const WD_RULE_NONE: i32 = 0;
pub const WD_RULE_UNIVERSAL: i32 = 1;
pub const WD_RULE_LEVEL: i32 = 2;
pub const WD_RULE_JACKKNIFE: i32 = 3;

pub const WD_SCALING_UNIT: i32 = 0;
pub const WD_SCALING_ZSCORE: i32 = 1;
pub const WD_SCALING_NONE: i32 = 2;

/// Observations, row-major.
pub struct WdSample(SampleSet);

pub struct WdBasis(Arc<WaveletBasis>);

/// A square-root density model with its coordinate transform.
pub struct WdModel(ModelFile);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(WdStatus, String);

fn status_of(e: &Error) -> WdStatus {
    match e {
        Error::Io(_) => WdStatus::Io,
        Error::Numeric(_) | Error::ZeroNorm | Error::QuadratureTooCoarse { .. } | Error::TableTooLarge { .. } => {
            WdStatus::Numeric
        }
        Error::Replicate { source, .. } => status_of(source),
        e if e.is_usage() => WdStatus::InvalidArgument,
        _ => WdStatus::Data,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(WdStatus::InvalidArgument, message.into())
}

fn null(name: &str) -> Failure {
    Failure(WdStatus::NullPointer, format!("`{name}` is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> WdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WdStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            WdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

fn criterion(code: i32) -> Result<Criterion, Failure> {
    match code {
        WD_CRITERION_NORMALIZED => Ok(Criterion::Normalized),
        WD_CRITERION_UNNORMALIZED => Ok(Criterion::Unnormalized),
        _ => Err(invalid(format!("unknown criterion code {code}"))),
    }
}

fn rule(code: i32) -> Result<Option<RuleKind>, Failure> {
    match code {
        WD_RULE_NONE => Ok(None),
        WD_RULE_UNIVERSAL => Ok(Some(RuleKind::Universal)),
        WD_RULE_LEVEL => Ok(Some(RuleKind::LevelDependent)),
        WD_RULE_JACKKNIFE => Ok(Some(RuleKind::Jackknife)),
        _ => Err(invalid(format!("unknown rule code {code}"))),
    }
}

fn scaling(code: i32) -> Result<Scaling, Failure> {
    match code {
        WD_SCALING_UNIT => Ok(Scaling::UnitCube),
        WD_SCALING_ZSCORE => Ok(Scaling::ZScore),
        WD_SCALING_NONE => Ok(Scaling::Identity),
        _ => Err(invalid(format!("unknown scaling code {code}"))),
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `wd_*` call on this thread.
#[no_mangle]
pub extern "C" fn wd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `n * d` row-major values into a new sample.
///
/// # Safety
/// `data` must point to `n * d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_sample_new(data: *const f64, n: usize, d: usize, out: *mut *mut WdSample) -> WdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if data.is_null() {
            return Err(null("data"));
        }
        let len = n.checked_mul(d).ok_or_else(|| invalid("n * d overflows"))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        *out = Box::into_raw(Box::new(WdSample(SampleSet::new(values, d)?)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`wd_sample_new`] and not be freed twice; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn wd_sample_free(s: *mut WdSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Basis by name: `haar`, `db2`..`db10`, `sym2`..`sym10`.
///
/// # Safety
/// `family` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_basis_new(family: *const c_char, out: *mut *mut WdBasis) -> WdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let family: WaveletFamily = c_str(family, "family")?.parse()?;
        *out = Box::into_raw(Box::new(WdBasis(make_basis(family)?)));
        Ok(())
    })
}

/// # Safety
/// `b` must come from [`wd_basis_new`] and not be freed twice; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn wd_basis_free(b: *mut WdBasis) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Resolution `J-hat` maximizing the chosen leave-one-out criterion over the
/// default candidate range, after applying `scaling` to the sample.
///
/// # Safety
/// Handles must be valid; `j_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_select_resolution(
    s: *const WdSample,
    b: *const WdBasis,
    criterion_code: i32,
    scaling_code: i32,
    j_out: *mut i32,
) -> WdStatus {
    guard(|| {
        let s = &deref(s, "sample")?.0;
        let basis = &deref(b, "basis")?.0;
        let j_out = out_ptr(j_out, "j_out")?;
        let crit = criterion(criterion_code)?;
        let transform = scaling(scaling_code)?.transform(s)?;
        let scaled;
        let s = match &transform {
            Some(t) => {
                scaled = t.apply_sample(s)?;
                &scaled
            }
            None => s,
        };
        let t = build_neighbors(s)?;
        let candidates = ResolutionBounds::new(s.len()).candidates()?;
        let (norm, unnorm) = resolution_curves(s, &t, basis, &candidates)?;
        *j_out = match crit {
            Criterion::Normalized => norm.argmax(),
            Criterion::Unnormalized => unnorm.argmax(),
        } as i32;
        Ok(())
    })
}

/// Fits levels `j0..=j` in the sample's own coordinates, without selection
/// or thresholding. With `normalize` nonzero the model is scaled to unit norm.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_fit(
    s: *const WdSample,
    b: *const WdBasis,
    j0: i32,
    j: i32,
    normalize: i32,
    out: *mut *mut WdModel,
) -> WdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let s = &deref(s, "sample")?.0;
        let basis = &deref(b, "basis")?.0;
        let t = build_neighbors(s)?;
        let mut m = fit(s, &t, basis, j0, j)?;
        if normalize != 0 {
            m = m.normalize()?;
        }
        *out = Box::into_raw(Box::new(WdModel(ModelFile::new(m, None))));
        Ok(())
    })
}

/// Full pipeline: scaling, resolution selection, `j0 = J-hat - delta_j`,
/// optional thresholding, normalization.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_fit_auto(
    s: *const WdSample,
    b: *const WdBasis,
    delta_j: i32,
    criterion_code: i32,
    rule_code: i32,
    scaling_code: i32,
    out: *mut *mut WdModel,
) -> WdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let s = &deref(s, "sample")?.0;
        let basis = &deref(b, "basis")?.0;
        let mut cfg = PipelineConfig::new(basis.clone());
        cfg.delta_j = delta_j;
        cfg.criterion = criterion(criterion_code)?;
        cfg.scaling = scaling(scaling_code)?;
        let outcome = fit_auto(s, &cfg, rule(rule_code)?)?;
        *out = Box::into_raw(Box::new(WdModel(outcome.model_file())));
        Ok(())
    })
}

/// Density values at `m` points of the model's dimension, row-major.
///
/// # Safety
/// `x` must hold `m * dim` doubles and `out` room for `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn wd_model_eval(model: *const WdModel, x: *const f64, m: usize, out: *mut f64) -> WdStatus {
    guard(|| {
        let file = &deref(model, "model")?.0;
        if x.is_null() {
            return Err(null("x"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let d = file.model.dim();
        let len = m.checked_mul(d).ok_or_else(|| invalid("m * dim overflows"))?;
        let xs = std::slice::from_raw_parts(x, len);
        let dst = std::slice::from_raw_parts_mut(out, m);
        for (row, v) in xs.chunks_exact(d).zip(dst.iter_mut()) {
            *v = file.density(row)?;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_model_dim(model: *const WdModel, out: *mut usize) -> WdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(model, "model")?.0.model.dim();
        Ok(())
    })
}

/// Number of nonzero coefficients (the length of the JSON coefficient list).
///
/// # Safety
/// `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_model_coefficient_count(model: *const WdModel, out: *mut usize) -> WdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(model, "model")?.0.model.kept_count();
        Ok(())
    })
}

/// Serializes the model; free the string with [`wd_string_free`].
///
/// # Safety
/// `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_model_to_json(model: *const WdModel, out: *mut *mut c_char) -> WdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let text = deref(model, "model")?.0.to_json()?;
        *out = CString::new(text).map_err(|_| invalid("JSON contains NUL"))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn wd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wd_model_from_json(json: *const c_char, out: *mut *mut WdModel) -> WdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let file = ModelFile::from_json(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(WdModel(file)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn wd_model_free(m: *mut WdModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
