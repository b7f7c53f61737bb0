//! C ABI for keysched.
//!
//! Every fallible function returns a [`KsStatus`]; on failure a description
//! is available from [`ks_last_error`] on the same thread. Objects are
//! opaque handles that must be released with the matching `_free` function.
//! Array outputs are written into caller buffers: `*out_len` always receives
//! the required length and `KS_STATUS_BUFFER_TOO_SMALL` is returned if
//! `cap` is smaller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use keysched::audiofeat::patch_token_count;
use keysched::eval::{match_keypoints, Threshold};
use keysched::flow::motion_curve;
use keysched::ingest::{load_frame_sequence, schedule_to_json};
use keysched::pipeline::{schedule_from_scores, DetectionParams};
use keysched::refops::{cfg_combine, GuidanceScales};
use keysched::schedule::freenoise_windows;
use keysched::{Error, FeatureMatrix, FlowParams, FrameSequence, KeyframeSchedule, MotionCurve, SelectionParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Io = 3,
    Flow = 4,
    Select = 5,
    Audio = 6,
    Geometry = 7,
    Eval = 8,
    InvalidArgument = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Half-open frame interval `[start, end)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KsWindow {
    pub start: usize,
    pub end: usize,
}

pub struct KsFrames(FrameSequence);

pub struct KsCurve(MotionCurve);

pub struct KsSchedule(KeyframeSchedule);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> KsStatus {
    match e {
        Error::Io { .. }
        | Error::EmptyDirectory(_)
        | Error::MalformedPgm { .. }
        | Error::DimensionMismatch { .. }
        | Error::UnsupportedEncoding(_)
        | Error::UnsupportedChannels(_)
        | Error::UnsupportedRate(_)
        | Error::Parse(_) => KsStatus::Io,
        Error::TooSmall { .. } | Error::TooShort(_) => KsStatus::Flow,
        Error::InvalidWindow(_)
        | Error::NotNormalized
        | Error::BadInterval(..)
        | Error::InvalidK { .. }
        | Error::InconsistentExtrema(_) => KsStatus::Select,
        Error::WrongSampleRate(_) | Error::KernelTooLarge { .. } => KsStatus::Audio,
        Error::BadGeometry(_) => KsStatus::Geometry,
        Error::NoValidInstances | Error::NotDivisibleByThree(_) => KsStatus::Eval,
        _ => KsStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (KsStatus, String)>) -> KsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KsStatus::Panic
        }
    }
}

fn lib<T>(r: keysched::Result<T>) -> Result<T, (KsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (KsStatus, String) {
    (KsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (KsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (KsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (KsStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, out_len: *mut usize) -> Result<(), (KsStatus, String)> {
    if out_len.is_null() {
        return Err(null("out_len"));
    }
    *out_len = src.len();
    if cap < src.len() {
        return Err((
            KsStatus::BufferTooSmall,
            format!("buffer holds {cap}, need {}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Message for the most recent failure on this thread, or null. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ks_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ks_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads every `.pgm` file in `dir` (sorted by name) as one sequence.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_frames_load(dir: *const c_char, fps: f64, out: *mut *mut KsFrames) -> KsStatus {
    guard(|| {
        if dir.is_null() {
            return Err(null("dir"));
        }
        let dir = CStr::from_ptr(dir)
            .to_str()
            .map_err(|_| (KsStatus::InvalidString, "dir is not UTF-8".to_string()))?;
        let seq = lib(load_frame_sequence(Path::new(dir), fps))?;
        emit(out, KsFrames(seq))
    })
}

/// # Safety
/// `frames` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_frames_len(frames: *const KsFrames) -> usize {
    frames.as_ref().map_or(0, |f| f.0.len())
}

/// # Safety
/// `frames` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ks_frames_free(frames: *mut KsFrames) {
    if !frames.is_null() {
        drop(Box::from_raw(frames));
    }
}

/// Per-frame motion scores with the default flow settings.
///
/// # Safety
/// `frames` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_motion_curve(frames: *const KsFrames, normalize: bool, out: *mut *mut KsCurve) -> KsStatus {
    guard(|| {
        let frames = borrow(frames, "frames")?;
        let curve = lib(motion_curve(&frames.0, &FlowParams::default(), normalize))?;
        emit(out, KsCurve(curve))
    })
}

/// Wraps raw, non-negative scores in a curve handle.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_curve_from_values(values: *const f64, len: usize, out: *mut *mut KsCurve) -> KsStatus {
    guard(|| {
        let v = slice(values, len, "values")?;
        let curve = lib(MotionCurve::raw(v.to_vec()))?;
        emit(out, KsCurve(curve))
    })
}

/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_curve_len(curve: *const KsCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `curve` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_curve_values(curve: *const KsCurve, buf: *mut f64, cap: usize, out_len: *mut usize) -> KsStatus {
    guard(|| copy_out(borrow(curve, "curve")?.0.values(), buf, cap, out_len))
}

/// # Safety
/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ks_curve_free(curve: *mut KsCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Smooths, normalizes and detects extrema with default settings, then
/// selects `t_k` keyframes. With `random`, peaks are drawn using `seed`.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_select(
    curve: *const KsCurve,
    t_k: usize,
    random: bool,
    seed: u64,
    out: *mut *mut KsSchedule,
) -> KsStatus {
    guard(|| {
        let curve = borrow(curve, "curve")?;
        let params = if random {
            SelectionParams::seeded_random(t_k, seed)
        } else {
            SelectionParams::new(t_k)
        };
        let (_, schedule) = lib(schedule_from_scores(&curve.0, &DetectionParams::default(), &params))?;
        emit(out, KsSchedule(schedule))
    })
}

/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_schedule_len(schedule: *const KsSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.keyframes.len())
}

/// # Safety
/// `schedule` must be a live handle; `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ks_schedule_keyframes(
    schedule: *const KsSchedule,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> KsStatus {
    guard(|| copy_out(&borrow(schedule, "schedule")?.0.keyframes, buf, cap, out_len))
}

/// Serializes the schedule as JSON. Release the string with
/// [`ks_string_free`].
///
/// # Safety
/// `schedule` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_schedule_to_json(schedule: *const KsSchedule, out: *mut *mut c_char) -> KsStatus {
    guard(|| {
        let json = lib(schedule_to_json(&borrow(schedule, "schedule")?.0))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = CString::new(json).map_err(|_| (KsStatus::InvalidString, "JSON contains NUL".to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `schedule` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ks_schedule_free(schedule: *mut KsSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ks_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_patch_token_count(t_a: usize, kernel: usize, stride: usize, out: *mut usize) -> KsStatus {
    guard(|| {
        let n = lib(patch_token_count(t_a, kernel, stride))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = n;
        Ok(())
    })
}

/// Overlapping windows of length `window` starting every `stride` frames.
///
/// # Safety
/// `buf` must hold `cap` windows; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_freenoise_windows(
    t: usize,
    window: usize,
    stride: usize,
    buf: *mut KsWindow,
    cap: usize,
    out_len: *mut usize,
) -> KsStatus {
    guard(|| {
        let plan = lib(freenoise_windows(t, window, stride))?;
        let w: Vec<KsWindow> = plan
            .windows
            .iter()
            .map(|&(start, end)| KsWindow { start, end })
            .collect();
        copy_out(&w, buf, cap, out_len)
    })
}

/// Combines four noise estimates of `len` values each with guidance
/// scales for image, text and audio conditioning.
///
/// # Safety
/// All input pointers must reference `len` doubles; `out` must hold `len`.
#[no_mangle]
pub unsafe extern "C" fn ks_cfg_combine(
    e_none: *const f64,
    e_img: *const f64,
    e_img_txt: *const f64,
    e_full: *const f64,
    len: usize,
    s_img: f64,
    s_txt: f64,
    s_aud: f64,
    out: *mut f64,
) -> KsStatus {
    guard(|| {
        let m = |p, what| -> Result<FeatureMatrix, (KsStatus, String)> {
            lib(FeatureMatrix::new(1, len, slice(p, len, what)?.to_vec()))
        };
        let r = lib(cfg_combine(
            &m(e_none, "e_none")?,
            &m(e_img, "e_img")?,
            &m(e_img_txt, "e_img_txt")?,
            &m(e_full, "e_full")?,
            GuidanceScales::new(s_img, s_txt, s_aud),
        ))?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(r.values().as_ptr(), out, len);
        Ok(())
    })
}

/// Size of a maximum one-to-one matching within distance `t` (strictly
/// below `t` when `strict`).
///
/// # Safety
/// `gt` and `pred` must reference `n_gt` and `n_pred` values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ks_match_keypoints(
    gt: *const usize,
    n_gt: usize,
    pred: *const usize,
    n_pred: usize,
    t: usize,
    strict: bool,
    out: *mut usize,
) -> KsStatus {
    guard(|| {
        let gt = slice(gt, n_gt, "gt")?;
        let pred = slice(pred, n_pred, "pred")?;
        let mode = if strict { Threshold::Strict } else { Threshold::Inclusive };
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match_keypoints(gt, pred, t, mode);
        Ok(())
    })
}
