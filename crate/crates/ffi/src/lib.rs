//! C ABI for the promptfuse fusion, uncertainty, and metric pipeline.
//!
//! Pixel data crosses the boundary as plain row-major float buffers; results
//! live behind opaque handles. Every function returns a [`PfStatus`]; any
//! status other than `PF_STATUS_OK` leaves an explanation in a thread-local
//! slot readable via [`pf_last_error_message`]. Handles own their memory and
//! must be released exactly once with the matching `_free` function. No call
//! unwinds across the boundary: panics are caught and reported as
//! `PF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use promptfuse::fusion::{binarize, fuse_mean, FusionError, PredictionSet};
use promptfuse::imaging::{load_raster_f32, save_raster_f32, ImagingError, ProbabilityMap};
use promptfuse::metrics::{dice, ece, s_measure, weighted_fmeasure, MetricError, MetricReport};
use promptfuse::prompts::{jitter_boxes, BoxPrompt, PromptConfig};
use promptfuse::uncertainty::{expected_entropy, predictive_entropy, variance_map, UncertaintyMap};

/// Result code returned by every `pf_` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A scalar or buffer argument was outside its documented domain.
    InvalidArgument = 2,
    /// Two rasters that must share a shape did not.
    DimensionMismatch = 3,
    /// The prediction set holds no maps.
    EmptySet = 4,
    /// A file could not be read, written, or decoded.
    Io = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// A probability map: a width x height row-major plane of floats in [0, 1].
///
/// Uncertainty outputs reuse this container because normalized entropy lies
/// in [0, 1] bits and binary variance in [0, 0.25].
pub struct PfMap(ProbabilityMap);

/// An ordered collection of equally sized probability maps awaiting fusion.
pub struct PfSet(Vec<ProbabilityMap>);

/// An axis-aligned box prompt with exclusive lower-right corner.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PfBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " "))
        .expect("nul bytes were just replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: PfStatus, message: String) -> PfStatus {
    set_error(message);
    status
}

/// Runs a body, converting an escaping panic into `PF_STATUS_PANIC`.
fn guarded(body: impl FnOnce() -> PfStatus) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "opaque panic payload".to_owned());
            fail(PfStatus::Panic, format!("caught panic: {detail}"))
        }
    }
}

/// # Safety
/// `ptr` must be null or valid for shared access for the call's duration.
unsafe fn borrow<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, PfStatus> {
    match ptr.as_ref() {
        Some(r) => Ok(r),
        None => Err(fail(
            PfStatus::NullArgument,
            format!("{name} must not be null"),
        )),
    }
}

/// # Safety
/// `ptr` must be null or valid for exclusive access for the call's duration.
unsafe fn borrow_mut<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, PfStatus> {
    match ptr.as_mut() {
        Some(r) => Ok(r),
        None => Err(fail(
            PfStatus::NullArgument,
            format!("{name} must not be null"),
        )),
    }
}

fn imaging_status(err: &ImagingError) -> PfStatus {
    match err {
        ImagingError::DimensionMismatch(_) => PfStatus::DimensionMismatch,
        ImagingError::InvariantViolation(_) => PfStatus::InvalidArgument,
        ImagingError::MissingFile(_)
        | ImagingError::UnsupportedFormat(_)
        | ImagingError::CorruptHeader(_)
        | ImagingError::BadMagic(_)
        | ImagingError::IoFailure(_) => PfStatus::Io,
    }
}

fn fusion_status(err: &FusionError) -> PfStatus {
    match err {
        FusionError::Empty => PfStatus::EmptySet,
        FusionError::LengthMismatch(_, _) => PfStatus::InvalidArgument,
        FusionError::DimensionMismatch(_) => PfStatus::DimensionMismatch,
    }
}

fn metric_status(err: &MetricError) -> PfStatus {
    match err {
        MetricError::DimensionMismatch(_) => PfStatus::DimensionMismatch,
    }
}

/// Builds the core prediction set for maps that already share a shape.
fn prediction_set(maps: &[ProbabilityMap]) -> Result<PredictionSet, PfStatus> {
    if maps.is_empty() {
        return Err(fail(
            PfStatus::EmptySet,
            "prediction set holds no maps".to_owned(),
        ));
    }
    let full = BoxPrompt::full_image(maps[0].width(), maps[0].height());
    PredictionSet::new(maps.to_vec(), vec![full; maps.len()])
        .map_err(|e| fail(fusion_status(&e), e.to_string()))
}

fn uncertainty_into_map(map: UncertaintyMap) -> ProbabilityMap {
    // Uncertainty rasters are clamped to [0, 1] at computation time, so the
    // probability-range invariant always holds here.
    ProbabilityMap::new(map.into_raster()).expect("uncertainty values stay within [0, 1]")
}

/// # Safety
/// `path` must be a nul-terminated string valid for the call's duration.
unsafe fn path_from(ptr: *const c_char, name: &str) -> Result<&Path, PfStatus> {
    if ptr.is_null() {
        return Err(fail(
            PfStatus::NullArgument,
            format!("{name} must not be null"),
        ));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(fail(
            PfStatus::InvalidArgument,
            format!("{name} must be valid UTF-8"),
        )),
    }
}

fn deliver_map(map: ProbabilityMap, out: *mut *mut PfMap) -> PfStatus {
    // Null checks run before any computation in the callers, so `out` is
    // known valid here.
    unsafe { *out = Box::into_raw(Box::new(PfMap(map))) };
    PfStatus::Ok
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Explanation of the most recent failure on this thread.
///
/// The pointer stays valid until the next failing `pf_` call on the same
/// thread. Before any failure it is the empty string.
#[no_mangle]
pub extern "C" fn pf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates a probability map from `len` row-major floats in [0, 1].
///
/// # Safety
/// `values` must point to `len` readable floats; `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_map_create(
    width: u32,
    height: u32,
    values: *const f32,
    len: usize,
    out_map: *mut *mut PfMap,
) -> PfStatus {
    guarded(|| {
        let out = match borrow_mut(out_map, "out_map") {
            Ok(o) => o,
            Err(s) => return s,
        };
        if values.is_null() {
            return fail(PfStatus::NullArgument, "values must not be null".to_owned());
        }
        let expected = width as usize * height as usize;
        if len != expected {
            return fail(
                PfStatus::InvalidArgument,
                format!("values holds {len} floats but {width}x{height} needs {expected}"),
            );
        }
        let data = std::slice::from_raw_parts(values, len).to_vec();
        match ProbabilityMap::from_values(width, height, data) {
            Ok(map) => deliver_map(map, out),
            Err(e) => fail(imaging_status(&e), e.to_string()),
        }
    })
}

/// Reads a probability map from a PMAP container file.
///
/// # Safety
/// `path` must be nul-terminated; `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_map_load(path: *const c_char, out_map: *mut *mut PfMap) -> PfStatus {
    guarded(|| {
        let out = match borrow_mut(out_map, "out_map") {
            Ok(o) => o,
            Err(s) => return s,
        };
        let path = match path_from(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let raster = match load_raster_f32(path) {
            Ok(r) => r,
            Err(e) => return fail(imaging_status(&e), e.to_string()),
        };
        match ProbabilityMap::new(raster) {
            Ok(map) => deliver_map(map, out),
            Err(e) => fail(imaging_status(&e), e.to_string()),
        }
    })
}

/// Writes a probability map to a PMAP container file.
///
/// # Safety
/// `map` must be a live handle; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn pf_map_save(map: *const PfMap, path: *const c_char) -> PfStatus {
    guarded(|| {
        let map = match borrow(map, "map") {
            Ok(m) => m,
            Err(s) => return s,
        };
        let path = match path_from(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match save_raster_f32(map.0.raster(), path) {
            Ok(()) => PfStatus::Ok,
            Err(e) => fail(imaging_status(&e), e.to_string()),
        }
    })
}

/// Reports a map's width in pixels.
///
/// # Safety
/// `map` must be a live handle; `out_width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_map_width(map: *const PfMap, out_width: *mut u32) -> PfStatus {
    guarded(|| {
        let map = match borrow(map, "map") {
            Ok(m) => m,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_width, "out_width") {
            Ok(o) => o,
            Err(s) => return s,
        };
        *out = map.0.width();
        PfStatus::Ok
    })
}

/// Reports a map's height in pixels.
///
/// # Safety
/// `map` must be a live handle; `out_height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_map_height(map: *const PfMap, out_height: *mut u32) -> PfStatus {
    guarded(|| {
        let map = match borrow(map, "map") {
            Ok(m) => m,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_height, "out_height") {
            Ok(o) => o,
            Err(s) => return s,
        };
        *out = map.0.height();
        PfStatus::Ok
    })
}

/// Exposes a map's row-major pixel buffer without copying.
///
/// The pointer borrows from the handle and dies with it.
///
/// # Safety
/// `map` must be a live handle; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_map_values(
    map: *const PfMap,
    out_values: *mut *const f32,
    out_len: *mut usize,
) -> PfStatus {
    guarded(|| {
        let map = match borrow(map, "map") {
            Ok(m) => m,
            Err(s) => return s,
        };
        let values = match borrow_mut(out_values, "out_values") {
            Ok(o) => o,
            Err(s) => return s,
        };
        let len = match borrow_mut(out_len, "out_len") {
            Ok(o) => o,
            Err(s) => return s,
        };
        *values = map.0.data().as_ptr();
        *len = map.0.data().len();
        PfStatus::Ok
    })
}

/// Releases a map handle. Null is a no-op.
///
/// # Safety
/// `map` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pf_map_free(map: *mut PfMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Creates an empty prediction set.
///
/// # Safety
/// `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_set_create(out_set: *mut *mut PfSet) -> PfStatus {
    guarded(|| {
        let out = match borrow_mut(out_set, "out_set") {
            Ok(o) => o,
            Err(s) => return s,
        };
        *out = Box::into_raw(Box::new(PfSet(Vec::new())));
        PfStatus::Ok
    })
}

/// Appends a copy of `map` to the set.
///
/// Every member must share the first member's shape.
///
/// # Safety
/// `set` and `map` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn pf_set_push(set: *mut PfSet, map: *const PfMap) -> PfStatus {
    guarded(|| {
        let set = match borrow_mut(set, "set") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let map = match borrow(map, "map") {
            Ok(m) => m,
            Err(s) => return s,
        };
        if let Some(first) = set.0.first() {
            if first.width() != map.0.width() || first.height() != map.0.height() {
                return fail(
                    PfStatus::DimensionMismatch,
                    format!(
                        "set members are {}x{} but the pushed map is {}x{}",
                        first.width(),
                        first.height(),
                        map.0.width(),
                        map.0.height()
                    ),
                );
            }
        }
        set.0.push(map.0.clone());
        PfStatus::Ok
    })
}

/// Reports how many maps the set holds.
///
/// # Safety
/// `set` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_set_len(set: *const PfSet, out_len: *mut usize) -> PfStatus {
    guarded(|| {
        let set = match borrow(set, "set") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_len, "out_len") {
            Ok(o) => o,
            Err(s) => return s,
        };
        *out = set.0.len();
        PfStatus::Ok
    })
}

/// Releases a set handle. Null is a no-op.
///
/// # Safety
/// `set` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pf_set_free(set: *mut PfSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Fuses the set into one map by per-pixel arithmetic mean.
///
/// # Safety
/// `set` must be a live handle; `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_fuse_mean(set: *const PfSet, out_map: *mut *mut PfMap) -> PfStatus {
    guarded(|| {
        let set = match borrow(set, "set") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_map, "out_map") {
            Ok(o) => o,
            Err(s) => return s,
        };
        match prediction_set(&set.0) {
            Ok(ps) => deliver_map(fuse_mean(&ps), out),
            Err(s) => s,
        }
    })
}

/// Entropy of the mean prediction, in bits within [0, 1].
///
/// # Safety
/// `set` must be a live handle; `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_predictive_entropy(
    set: *const PfSet,
    out_map: *mut *mut PfMap,
) -> PfStatus {
    guarded(|| {
        let set = match borrow(set, "set") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_map, "out_map") {
            Ok(o) => o,
            Err(s) => return s,
        };
        match prediction_set(&set.0) {
            Ok(ps) => deliver_map(uncertainty_into_map(predictive_entropy(&ps)), out),
            Err(s) => s,
        }
    })
}

/// Mean of the per-member entropies, in bits within [0, 1].
///
/// # Safety
/// `set` must be a live handle; `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_expected_entropy(
    set: *const PfSet,
    out_map: *mut *mut PfMap,
) -> PfStatus {
    guarded(|| {
        let set = match borrow(set, "set") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_map, "out_map") {
            Ok(o) => o,
            Err(s) => return s,
        };
        match prediction_set(&set.0) {
            Ok(ps) => deliver_map(uncertainty_into_map(expected_entropy(&ps)), out),
            Err(s) => s,
        }
    })
}

/// Per-pixel population variance of the members, within [0, 0.25].
///
/// # Safety
/// `set` must be a live handle; `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_variance_map(
    set: *const PfSet,
    out_map: *mut *mut PfMap,
) -> PfStatus {
    guarded(|| {
        let set = match borrow(set, "set") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_map, "out_map") {
            Ok(o) => o,
            Err(s) => return s,
        };
        match prediction_set(&set.0) {
            Ok(ps) => deliver_map(uncertainty_into_map(variance_map(&ps)), out),
            Err(s) => s,
        }
    })
}

/// Resolves the two raster arguments shared by every metric entry point.
///
/// # Safety
/// Both pointers must be live handles.
unsafe fn metric_args<'a>(
    pred: *const PfMap,
    gt: *const PfMap,
) -> Result<(&'a PfMap, &'a PfMap), PfStatus> {
    let pred = borrow(pred, "pred")?;
    let gt = borrow(gt, "gt")?;
    Ok((pred, gt))
}

/// Dice overlap between `pred` binarized at `threshold` and `gt` binarized
/// at 0.5. Two empty masks score 1.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_dice(
    pred: *const PfMap,
    gt: *const PfMap,
    threshold: f32,
    out_value: *mut f64,
) -> PfStatus {
    guarded(|| {
        let (pred, gt) = match metric_args(pred, gt) {
            Ok(pair) => pair,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_value, "out_value") {
            Ok(o) => o,
            Err(s) => return s,
        };
        if !(0.0..=1.0).contains(&threshold) {
            return fail(
                PfStatus::InvalidArgument,
                format!("threshold must lie in [0, 1], got {threshold}"),
            );
        }
        match dice(&binarize(&pred.0, threshold), &binarize(&gt.0, 0.5)) {
            Ok(v) => {
                *out = v;
                PfStatus::Ok
            }
            Err(e) => fail(metric_status(&e), e.to_string()),
        }
    })
}

/// Expected calibration error over `bins` confidence bins.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_ece(
    pred: *const PfMap,
    gt: *const PfMap,
    bins: u32,
    out_value: *mut f64,
) -> PfStatus {
    guarded(|| {
        let (pred, gt) = match metric_args(pred, gt) {
            Ok(pair) => pair,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_value, "out_value") {
            Ok(o) => o,
            Err(s) => return s,
        };
        if bins == 0 {
            return fail(
                PfStatus::InvalidArgument,
                "bins must be at least 1".to_owned(),
            );
        }
        match ece(&pred.0, &binarize(&gt.0, 0.5), bins as usize) {
            Ok(v) => {
                *out = v;
                PfStatus::Ok
            }
            Err(e) => fail(metric_status(&e), e.to_string()),
        }
    })
}

/// Structure measure with foreground/region trade-off `alpha`.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_s_measure(
    pred: *const PfMap,
    gt: *const PfMap,
    alpha: f64,
    out_value: *mut f64,
) -> PfStatus {
    guarded(|| {
        let (pred, gt) = match metric_args(pred, gt) {
            Ok(pair) => pair,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_value, "out_value") {
            Ok(o) => o,
            Err(s) => return s,
        };
        if !(0.0..=1.0).contains(&alpha) {
            return fail(
                PfStatus::InvalidArgument,
                format!("alpha must lie in [0, 1], got {alpha}"),
            );
        }
        match s_measure(&pred.0, &binarize(&gt.0, 0.5), alpha) {
            Ok(v) => {
                *out = v;
                PfStatus::Ok
            }
            Err(e) => fail(metric_status(&e), e.to_string()),
        }
    })
}

/// Weighted F-measure with trade-off `beta2` (beta squared).
///
/// # Safety
/// `pred` and `gt` must be live handles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_weighted_fmeasure(
    pred: *const PfMap,
    gt: *const PfMap,
    beta2: f64,
    out_value: *mut f64,
) -> PfStatus {
    guarded(|| {
        let (pred, gt) = match metric_args(pred, gt) {
            Ok(pair) => pair,
            Err(s) => return s,
        };
        let out = match borrow_mut(out_value, "out_value") {
            Ok(o) => o,
            Err(s) => return s,
        };
        if !beta2.is_finite() || beta2 <= 0.0 {
            return fail(
                PfStatus::InvalidArgument,
                format!("beta2 must be finite and positive, got {beta2}"),
            );
        }
        match weighted_fmeasure(&pred.0, &binarize(&gt.0, 0.5), beta2) {
            Ok(v) => {
                *out = v;
                PfStatus::Ok
            }
            Err(e) => fail(metric_status(&e), e.to_string()),
        }
    })
}

/// All four metrics in the standard configuration: Dice at threshold 0.5,
/// ECE over 10 bins, S-measure at alpha 0.5, weighted F-measure at beta2 1.
///
/// # Safety
/// `pred` and `gt` must be live handles; all out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_metric_report(
    pred: *const PfMap,
    gt: *const PfMap,
    out_dice: *mut f64,
    out_ece: *mut f64,
    out_sm: *mut f64,
    out_wfm: *mut f64,
) -> PfStatus {
    guarded(|| {
        let (pred, gt) = match metric_args(pred, gt) {
            Ok(pair) => pair,
            Err(s) => return s,
        };
        let (d, e, sm, wfm) = match (
            borrow_mut(out_dice, "out_dice"),
            borrow_mut(out_ece, "out_ece"),
            borrow_mut(out_sm, "out_sm"),
            borrow_mut(out_wfm, "out_wfm"),
        ) {
            (Ok(d), Ok(e), Ok(sm), Ok(wfm)) => (d, e, sm, wfm),
            (Err(s), _, _, _) | (_, Err(s), _, _) | (_, _, Err(s), _) | (_, _, _, Err(s)) => {
                return s
            }
        };
        match MetricReport::evaluate(&pred.0, &binarize(&gt.0, 0.5)) {
            Ok(report) => {
                *d = report.dice;
                *e = report.ece;
                *sm = report.sm;
                *wfm = report.wfm;
                PfStatus::Ok
            }
            Err(err) => fail(metric_status(&err), err.to_string()),
        }
    })
}

/// Samples `m` jittered copies of `base` into `out_boxes`.
///
/// Each edge displaces by `trunc(u * side)` pixels with `u` uniform in
/// `[-jitter_ratio, jitter_ratio)`, clamped to the image; degenerate draws
/// are resampled. The same arguments always produce the same boxes.
///
/// # Safety
/// `out_boxes` must point to at least `capacity` writable elements;
/// `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_jitter_boxes(
    base: PfBox,
    m: u32,
    jitter_ratio: f64,
    seed: u64,
    image_width: u32,
    image_height: u32,
    out_boxes: *mut PfBox,
    capacity: usize,
    out_len: *mut usize,
) -> PfStatus {
    guarded(|| {
        let out_len = match borrow_mut(out_len, "out_len") {
            Ok(o) => o,
            Err(s) => return s,
        };
        if out_boxes.is_null() {
            return fail(
                PfStatus::NullArgument,
                "out_boxes must not be null".to_owned(),
            );
        }
        if capacity < m as usize {
            return fail(
                PfStatus::InvalidArgument,
                format!("capacity {capacity} cannot hold {m} boxes"),
            );
        }
        if !(0.0..=1.0).contains(&jitter_ratio) {
            return fail(
                PfStatus::InvalidArgument,
                format!("jitter_ratio must lie in [0, 1], got {jitter_ratio}"),
            );
        }
        let prompt = match BoxPrompt::new(base.x0, base.y0, base.x1, base.y1) {
            Ok(p) => p,
            Err(e) => return fail(PfStatus::InvalidArgument, e.to_string()),
        };
        if !prompt.fits(image_width, image_height) {
            return fail(
                PfStatus::InvalidArgument,
                format!(
                    "base box does not fit inside a {image_width}x{image_height} image"
                ),
            );
        }
        let cfg = PromptConfig { m: m as usize, jitter_ratio, seed };
        let boxes = jitter_boxes(prompt, &cfg, image_width, image_height);
        for (i, b) in boxes.iter().enumerate() {
            *out_boxes.add(i) = PfBox { x0: b.x0, y0: b.y0, x1: b.x1, y1: b.y1 };
        }
        *out_len = boxes.len();
        PfStatus::Ok
    })
}
