//! C ABI over the candid engine.
//!
//! Every function returns a [`CandidStatus`]. On failure a human-readable
//! message is kept per thread and can be fetched with
//! [`candid_last_error_message`]. Engines are opaque handles created by
//! [`candid_engine_new`] and released with [`candid_engine_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use candid::evaluator::{compute_metrics, ConfusionCounts};
use candid::preprocess::{median_filter, MedianFilterSpec};
use candid::{Engine, Error, ErrorClass, Frame, Params};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ConfigError = 4,
    IoError = 5,
    DataError = 6,
    Panic = 7,
}

/// Engine parameters. Obtain defaults from [`candid_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidParams {
    pub init_frames: u32,
    pub alpha: f64,
    pub beta: f64,
    pub samples: u32,
    pub gamma: f64,
    pub xi: f64,
    pub min_matches: u32,
    pub t_min: f64,
    pub t_max: f64,
    pub median_window: u32,
    pub seed: u64,
}

impl From<&Params> for CandidParams {
    fn from(p: &Params) -> Self {
        Self {
            init_frames: p.init_frames as u32,
            alpha: p.alpha,
            beta: p.beta,
            samples: p.samples as u32,
            gamma: p.gamma,
            xi: p.xi,
            min_matches: p.min_matches as u32,
            t_min: p.t_min,
            t_max: p.t_max,
            median_window: p.median_window as u32,
            seed: p.seed,
        }
    }
}

impl From<&CandidParams> for Params {
    fn from(p: &CandidParams) -> Self {
        Params {
            init_frames: p.init_frames as usize,
            alpha: p.alpha,
            beta: p.beta,
            samples: p.samples as usize,
            gamma: p.gamma,
            xi: p.xi,
            min_matches: p.min_matches as usize,
            t_min: p.t_min,
            t_max: p.t_max,
            median_window: p.median_window as usize,
            seed: p.seed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub specificity: f64,
    pub pwc: f64,
    /// Non-zero when any ratio had a zero denominator and was reported as 0.
    pub degenerate: u8,
}

/// Opaque segmentation engine.
pub struct CandidEngine {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CandidStatus {
    match e {
        Error::Io { .. } | Error::MissingDirectory(..) | Error::NoFrames { .. } => CandidStatus::IoError,
        Error::FrameDimensions { .. } | Error::DimensionMismatch { .. } | Error::BufferLength { .. } => {
            CandidStatus::DimensionMismatch
        }
        Error::InvalidParam { .. } => CandidStatus::InvalidArgument,
        _ => match e.class() {
            ErrorClass::Usage => CandidStatus::ConfigError,
            ErrorClass::Data => CandidStatus::DataError,
        },
    }
}

fn fail(status: CandidStatus, message: impl Into<String>) -> CandidStatus {
    set_last_error(message.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), CandidStatus>) -> CandidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CandidStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CandidStatus::Panic, msg)
        }
    }
}

fn check(e: Error) -> CandidStatus {
    fail(status_of(&e), e.to_string())
}

/// Message for the most recent failure on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn candid_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be NULL or point to writable memory for one `CandidParams`.
#[no_mangle]
pub unsafe extern "C" fn candid_params_default(out: *mut CandidParams) -> CandidStatus {
    if out.is_null() {
        return fail(CandidStatus::NullPointer, "out is null");
    }
    out.write(CandidParams::from(&Params::default()));
    CandidStatus::Ok
}

fn new_engine(params: Params, width: u32, height: u32, out: *mut *mut CandidEngine) -> Result<(), CandidStatus> {
    params.validate().map_err(check)?;
    let engine = Engine::new(params, width as usize, height as usize).map_err(check)?;
    let handle = Box::into_raw(Box::new(CandidEngine { engine }));
    // SAFETY: callers check `out` for null before reaching here.
    unsafe { out.write(handle) };
    Ok(())
}

/// Create an engine for `width` x `height` frames.
///
/// # Safety
/// `params` must point to a valid `CandidParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candid_engine_new(
    params: *const CandidParams,
    width: u32,
    height: u32,
    out: *mut *mut CandidEngine,
) -> CandidStatus {
    if params.is_null() || out.is_null() {
        return fail(CandidStatus::NullPointer, "params or out is null");
    }
    let p = Params::from(&*params);
    guard(|| new_engine(p, width, height, out))
}

/// Create an engine from a `key = value` config file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candid_engine_new_from_config(
    path: *const c_char,
    width: u32,
    height: u32,
    out: *mut *mut CandidEngine,
) -> CandidStatus {
    if path.is_null() || out.is_null() {
        return fail(CandidStatus::NullPointer, "path or out is null");
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(CandidStatus::InvalidArgument, "path is not valid UTF-8");
    };
    guard(|| {
        let params = Params::load(Path::new(path)).map_err(check)?;
        new_engine(params, width, height, out)
    })
}

/// Feed one 8-bit grayscale frame of `len` bytes, row-major without padding.
/// Writes the binary mask (0 or 255 per pixel) into `mask_out`, which must
/// hold the same number of bytes, and sets `*warmup` to 1 while the model is
/// still being initialized.
///
/// # Safety
/// `engine` must come from `candid_engine_new*`. `frame` and `mask_out` must
/// each be valid for `len` bytes. `warmup` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn candid_engine_push_frame(
    engine: *mut CandidEngine,
    frame: *const u8,
    len: usize,
    mask_out: *mut u8,
    warmup: *mut u8,
) -> CandidStatus {
    if engine.is_null() || frame.is_null() || mask_out.is_null() {
        return fail(CandidStatus::NullPointer, "engine, frame or mask_out is null");
    }
    let engine = &mut (*engine).engine;
    let input = std::slice::from_raw_parts(frame, len);
    let mask = std::slice::from_raw_parts_mut(mask_out, len);
    guard(|| {
        let (w, h) = (engine.width(), engine.height());
        if len != w * h {
            return Err(fail(
                CandidStatus::DimensionMismatch,
                format!("expected {} bytes for {w}x{h}, got {len}", w * h),
            ));
        }
        let f = Frame::new(w, h, input.to_vec()).map_err(check)?;
        let out = engine.push(&f).map_err(check)?;
        mask.copy_from_slice(&out.mask.to_bytes());
        if !warmup.is_null() {
            warmup.write(out.warmup as u8);
        }
        Ok(())
    })
}

/// Number of frames consumed so far.
///
/// # Safety
/// `engine` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn candid_engine_frame_index(engine: *const CandidEngine) -> u64 {
    if engine.is_null() {
        return 0;
    }
    (*engine).engine.frames_seen() as u64
}

/// # Safety
/// `engine` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn candid_engine_free(engine: *mut CandidEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Precision, recall, F-measure, specificity and PWC from confusion counts.
///
/// # Safety
/// `out` must point to writable memory for one `CandidMetrics`.
#[no_mangle]
pub unsafe extern "C" fn candid_metrics_from_counts(
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
    out: *mut CandidMetrics,
) -> CandidStatus {
    if out.is_null() {
        return fail(CandidStatus::NullPointer, "out is null");
    }
    match compute_metrics(&ConfusionCounts::new(tp, fp, tn, fn_)) {
        Ok(m) => {
            out.write(CandidMetrics {
                precision: m.pr,
                recall: m.re,
                f_measure: m.fm,
                specificity: m.sp,
                pwc: m.pwc,
                degenerate: m.degenerate.any() as u8,
            });
            CandidStatus::Ok
        }
        Err(e) => fail(CandidStatus::InvalidArgument, e.to_string()),
    }
}

/// Square median filter with edge replication. `window` must be odd.
///
/// # Safety
/// `src` and `dst` must each be valid for `width * height` bytes and must not
/// overlap.
#[no_mangle]
pub unsafe extern "C" fn candid_median_filter(
    src: *const u8,
    dst: *mut u8,
    width: u32,
    height: u32,
    window: u32,
) -> CandidStatus {
    if src.is_null() || dst.is_null() {
        return fail(CandidStatus::NullPointer, "src or dst is null");
    }
    let Some(spec) = MedianFilterSpec::new(window as usize) else {
        return fail(CandidStatus::InvalidArgument, format!("window must be odd, got {window}"));
    };
    let (w, h) = (width as usize, height as usize);
    let input = std::slice::from_raw_parts(src, w * h);
    let output = std::slice::from_raw_parts_mut(dst, w * h);
    guard(|| {
        let f = Frame::new(w, h, input.to_vec()).map_err(check)?;
        output.copy_from_slice(median_filter(&f, spec).data());
        Ok(())
    })
}
