//! C ABI over the hypercount sketch.
//!
//! Handles are opaque heap objects owned by the caller and released with the
//! matching `*_free` function. Every entry point returns an [`HcStatus`]; on
//! failure a message is stored per thread and can be read with
//! [`hc_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use hypercount::cover::solve_cover_full_support;
use hypercount::estimate::estimate_from;
use hypercount::hypergraph::{parse_pattern, DataEdge, EdgeStreamUpdate, PatternGraph};
use hypercount::pattern::{analyze, PatternAnalysis};
use hypercount::sketch::{SketchConfig, SketchError, SketchState};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    UnsupportedPattern = 5,
    ConfigMismatch = 6,
    StrictViolation = 7,
    BufferTooSmall = 8,
    DecodeError = 9,
    Panic = 10,
}

/// Parsed pattern plus its cached analysis.
pub struct HcPattern {
    pattern: PatternGraph,
    analysis: PatternAnalysis,
}

/// A sketch state bound to a pattern.
pub struct HcSketch {
    state: SketchState,
    analysis: PatternAnalysis,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HcEstimate {
    pub value: f64,
    pub copies_found: u64,
    pub p_used: f64,
    pub retained: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(HcStatus, String);

type Outcome = Result<(), Failure>;

fn fail<T>(status: HcStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn sketch_failure(e: SketchError) -> Failure {
    let status = match e {
        SketchError::InvalidP(_) | SketchError::CoverSize { .. } | SketchError::CoverInfeasible => {
            HcStatus::InvalidArgument
        }
        SketchError::UnsupportedPattern | SketchError::PatternTooLarge(_) => HcStatus::UnsupportedPattern,
        SketchError::ConfigMismatch => HcStatus::ConfigMismatch,
        SketchError::StrictViolation(_) => HcStatus::StrictViolation,
        SketchError::Decode(_) => HcStatus::DecodeError,
    };
    Failure(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Outcome) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(HcStatus::NullPointer, format!("{what} is null")),
    }
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    match p.as_mut() {
        Some(r) => Ok(r),
        None => fail(HcStatus::NullPointer, format!("{what} is null")),
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a pattern in the text format (`k=3`, then `e a b` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_pattern_parse(text: *const c_char, out: *mut *mut HcPattern) -> HcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        if text.is_null() {
            return fail(HcStatus::NullPointer, "text is null");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(HcStatus::InvalidUtf8, "pattern text is not UTF-8");
        };
        let pattern = parse_pattern(text).or_else(|e| fail(HcStatus::ParseError, e.to_string()))?;
        let analysis = analyze(&pattern).or_else(|e| fail(HcStatus::UnsupportedPattern, e.to_string()))?;
        *out = Box::into_raw(Box::new(HcPattern { pattern, analysis }));
        Ok(())
    })
}

/// # Safety
/// `pattern` must come from [`hc_pattern_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_pattern_free(pattern: *mut HcPattern) {
    if !pattern.is_null() {
        drop(Box::from_raw(pattern));
    }
}

/// # Safety
/// `pattern` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_pattern_vertex_count(pattern: *const HcPattern, out: *mut usize) -> HcStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(pattern, "pattern")?.pattern.k();
        Ok(())
    })
}

/// Number of automorphisms of the pattern.
///
/// # Safety
/// `pattern` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_pattern_automorphisms(pattern: *const HcPattern, out: *mut u64) -> HcStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(pattern, "pattern")?.analysis.automorphisms;
        Ok(())
    })
}

/// Fractional vertex cover number as an exact fraction.
///
/// # Safety
/// `pattern` must be a live handle; `numer` and `denom` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_pattern_cover_value(
    pattern: *const HcPattern,
    numer: *mut i64,
    denom: *mut i64,
) -> HcStatus {
    guard(|| {
        let pattern = deref(pattern, "pattern")?;
        let numer = deref_mut(numer, "numer")?;
        let denom = deref_mut(denom, "denom")?;
        let cover =
            solve_cover_full_support(&pattern.pattern).or_else(|e| fail(HcStatus::UnsupportedPattern, e.to_string()))?;
        *numer = *cover.value.numer();
        *denom = *cover.value.denom();
        Ok(())
    })
}

/// Creates an empty sketch sampling at rate `p` in (0, 1].
///
/// # Safety
/// `pattern` must be a live handle and `out` writable. The sketch keeps its
/// own copy of the pattern.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_new(
    pattern: *const HcPattern,
    p: f64,
    seed: u64,
    out: *mut *mut HcSketch,
) -> HcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let pattern = deref(pattern, "pattern")?;
        let cover =
            solve_cover_full_support(&pattern.pattern).or_else(|e| fail(HcStatus::UnsupportedPattern, e.to_string()))?;
        let config = SketchConfig::new(pattern.pattern.clone(), &cover, p, seed).map_err(sketch_failure)?;
        *out = Box::into_raw(Box::new(HcSketch {
            state: SketchState::new(config),
            analysis: pattern.analysis.clone(),
        }));
        Ok(())
    })
}

/// # Safety
/// `sketch` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_free(sketch: *mut HcSketch) {
    if !sketch.is_null() {
        drop(Box::from_raw(sketch));
    }
}

/// Applies one update: `sign` is +1 (insert) or -1 (delete); `endpoints`
/// holds `len >= 2` distinct vertex ids.
///
/// # Safety
/// `sketch` must be a live handle and `endpoints` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_update(
    sketch: *mut HcSketch,
    sign: i32,
    endpoints: *const u64,
    len: usize,
) -> HcStatus {
    guard(|| {
        let sketch = deref_mut(sketch, "sketch")?;
        if endpoints.is_null() {
            return fail(HcStatus::NullPointer, "endpoints is null");
        }
        let edge = DataEdge::new(slice::from_raw_parts(endpoints, len).to_vec())
            .or_else(|e| fail(HcStatus::InvalidArgument, e.to_string()))?;
        let update = match sign {
            1 => EdgeStreamUpdate::insert(edge),
            -1 => EdgeStreamUpdate::delete(edge),
            _ => return fail(HcStatus::InvalidArgument, format!("sign must be +1 or -1, got {sign}")),
        };
        sketch.state.update(&update);
        Ok(())
    })
}

/// Adds `other` into `into`. Both must share pattern, rate and seed.
///
/// # Safety
/// Both must be live handles; they may not alias.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_merge(into: *mut HcSketch, other: *const HcSketch) -> HcStatus {
    guard(|| {
        if ptr::eq(into, other) {
            return fail(HcStatus::InvalidArgument, "cannot merge a sketch into itself");
        }
        let other = deref(other, "other")?;
        let into = deref_mut(into, "into")?;
        into.state.merge_from(&other.state).map_err(sketch_failure)
    })
}

/// Number of edges with a nonzero counter.
///
/// # Safety
/// `sketch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_retained(sketch: *const HcSketch, out: *mut u64) -> HcStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(sketch, "sketch")?.state.retained_count() as u64;
        Ok(())
    })
}

/// Unbiased copy-count estimate from the sketch's current contents.
///
/// # Safety
/// `sketch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_estimate(sketch: *const HcSketch, out: *mut HcEstimate) -> HcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let sketch = deref(sketch, "sketch")?;
        let est = estimate_from(&sketch.state, &sketch.analysis).map_err(|e| match e {
            hypercount::estimate::EstimateError::Sketch(s) => sketch_failure(s),
            other => Failure(HcStatus::InvalidArgument, other.to_string()),
        })?;
        *out = HcEstimate {
            value: est.value,
            copies_found: est.copies_found,
            p_used: est.p_used,
            retained: est.retained,
        };
        Ok(())
    })
}

/// Encodes the sketch into `buf`. `*written` receives the encoded length; if
/// `cap` is too small nothing is copied and `HC_STATUS_BUFFER_TOO_SMALL` is
/// returned, so a call with `buf = NULL, cap = 0` queries the size.
///
/// # Safety
/// `sketch` must be a live handle, `written` writable, and `buf` valid for
/// `cap` bytes when non-null.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_serialize(
    sketch: *const HcSketch,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> HcStatus {
    guard(|| {
        let written = deref_mut(written, "written")?;
        let bytes = deref(sketch, "sketch")?.state.to_bytes();
        *written = bytes.len();
        if cap < bytes.len() {
            return fail(HcStatus::BufferTooSmall, format!("need {} bytes, have {cap}", bytes.len()));
        }
        if buf.is_null() {
            return fail(HcStatus::NullPointer, "buf is null");
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// Decodes a sketch produced by [`hc_sketch_serialize`].
///
/// # Safety
/// `buf` must be valid for `len` bytes and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_sketch_deserialize(buf: *const u8, len: usize, out: *mut *mut HcSketch) -> HcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        if buf.is_null() {
            return fail(HcStatus::NullPointer, "buf is null");
        }
        let state = SketchState::from_bytes(slice::from_raw_parts(buf, len)).map_err(sketch_failure)?;
        let analysis =
            analyze(state.config().pattern()).or_else(|e| fail(HcStatus::UnsupportedPattern, e.to_string()))?;
        *out = Box::into_raw(Box::new(HcSketch { state, analysis }));
        Ok(())
    })
}
