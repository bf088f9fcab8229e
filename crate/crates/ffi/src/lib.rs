//! C ABI over the `glosser` crate.
//!
//! Models are opaque handles created by [`glosser_checkpoint_load`] and
//! released with [`glosser_model_free`]. Every fallible function returns a
//! [`GlosserStatus`]; on failure a message is available from
//! [`glosser_last_error`] on the same thread. Strings returned through out
//! pointers are owned by the caller and must be released with
//! [`glosser_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use glosser::eval::{evaluate, EvalOptions};
use glosser::igt::{parse_igt, serialize_igt};
use glosser::model::{annotate, load_checkpoint, CheckpointError, ModelCheckpoint, ModelError};
use glosser::synthetic::{self, Profile};
use glosser::Track;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlosserStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptCheckpoint = 4,
    Parse = 5,
    TrackMismatch = 6,
    Evaluation = 7,
    InvalidArgument = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlosserTrack {
    Open = 0,
    Closed = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlosserProfile {
    Agglutinative = 0,
    Isolating = 1,
}

impl From<Track> for GlosserTrack {
    fn from(t: Track) -> Self {
        match t {
            Track::Open => GlosserTrack::Open,
            Track::Closed => GlosserTrack::Closed,
        }
    }
}

/// A loaded checkpoint.
pub struct GlosserModel {
    checkpoint: ModelCheckpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GlosserStatus, String);

type Outcome<T> = Result<T, Failure>;

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

/// Runs `body`, recording its error message and turning panics into
/// [`GlosserStatus::Internal`].
fn guard<F: FnOnce() -> Outcome<()>>(body: F) -> GlosserStatus {
    set_last_error(None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GlosserStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal error (panic)".into()));
            GlosserStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(Failure(GlosserStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(GlosserStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Outcome<()> {
    let c = CString::new(s).map_err(|_| Failure(GlosserStatus::Internal, "output contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn check_out<T>(out: *mut T, name: &str) -> Outcome<()> {
    if out.is_null() {
        return Err(Failure(GlosserStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

fn model_failure(e: ModelError) -> Failure {
    let status = match e {
        ModelError::TrackMismatch { .. } => GlosserStatus::TrackMismatch,
        _ => GlosserStatus::Internal,
    };
    Failure(status, e.to_string())
}

/// Loads a checkpoint file into a new model handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glosser_checkpoint_load(path: *const c_char, out: *mut *mut GlosserModel) -> GlosserStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let checkpoint = load_checkpoint(path).map_err(|e| match e {
            CheckpointError::Io(err) => Failure(GlosserStatus::Io, format!("{path}: {err}")),
            other => Failure(GlosserStatus::CorruptCheckpoint, format!("{path}: {other}")),
        })?;
        *out = Box::into_raw(Box::new(GlosserModel { checkpoint }));
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`glosser_checkpoint_load`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn glosser_model_free(model: *mut GlosserModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Track the model was trained for.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glosser_model_track(model: *const GlosserModel, out: *mut GlosserTrack) -> GlosserStatus {
    guard(|| {
        check_out(out, "out")?;
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(GlosserStatus::NullPointer, "model is null".into()))?;
        *out = model.checkpoint.track.into();
        Ok(())
    })
}

/// Predicts the gloss lines of an IGT document and returns the document
/// with `\g` lines replaced.
///
/// # Safety
/// `model` must be a live handle, `igt` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn glosser_predict_igt(
    model: *const GlosserModel,
    igt: *const c_char,
    out: *mut *mut c_char,
) -> GlosserStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = ptr::null_mut();
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(GlosserStatus::NullPointer, "model is null".into()))?;
        let text = str_arg(igt, "igt")?;
        let entries = parse_igt(text).map_err(|e| Failure(GlosserStatus::Parse, e.to_string()))?;
        let ckpt = &model.checkpoint;
        let annotated = annotate(ckpt, &entries, ckpt.track).map_err(model_failure)?;
        write_string(out, serialize_igt(&annotated))
    })
}

/// Scores predicted against gold IGT documents; writes the metrics report as
/// JSON.
///
/// # Safety
/// `pred` and `gold` must be NUL-terminated, `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn glosser_evaluate_igt(
    pred: *const c_char,
    gold: *const c_char,
    out_json: *mut *mut c_char,
) -> GlosserStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let pred = parse_igt(str_arg(pred, "pred")?).map_err(|e| Failure(GlosserStatus::Parse, e.to_string()))?;
        let gold = parse_igt(str_arg(gold, "gold")?).map_err(|e| Failure(GlosserStatus::Parse, e.to_string()))?;
        let report = evaluate(&pred, &gold, &EvalOptions::new())
            .map_err(|e| Failure(GlosserStatus::Evaluation, e.to_string()))?;
        write_string(out_json, report.to_json())
    })
}

/// Generates a synthetic IGT corpus of `size` entries.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glosser_generate_synthetic(
    seed: u64,
    size: usize,
    profile: GlosserProfile,
    out: *mut *mut c_char,
) -> GlosserStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = ptr::null_mut();
        if size == 0 {
            return Err(Failure(GlosserStatus::InvalidArgument, "size must be at least 1".into()));
        }
        let profile = match profile {
            GlosserProfile::Agglutinative => Profile::Agglutinative,
            GlosserProfile::Isolating => Profile::Isolating,
        };
        write_string(out, serialize_igt(&synthetic::generate(seed, size, profile)))
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn glosser_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn glosser_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn glosser_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
