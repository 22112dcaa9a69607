//! C ABI over `caravel-core`.
//!
//! Volumes and feature sets cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free` function. Every fallible call
//! returns a [`CaravelStatus`]; on failure a message is available from
//! [`caravel_last_error`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::OnceLock;

use caravel_core::features::FEATURE_NAMES;
use caravel_core::io::load_mask;
use caravel_core::output::SubjectFeatures;
use caravel_core::pipeline::{extract_features, RunConfig};
use caravel_core::regional::regional_features;
use caravel_core::{Error, LabelVolume, VoxelVolume};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaravelStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were readable but not acceptable (bad dims, spacing, config, UTF-8, region).
    InvalidArgument = 2,
    /// A file could not be read.
    Io = 3,
    /// A file or JSON document was malformed.
    Format = 4,
    /// Mask and atlas grids differ.
    DimensionMismatch = 5,
    /// The name is not one of the feature names.
    UnknownFeature = 6,
    /// The feature exists but is undefined for this input; the value is NaN.
    Undefined = 7,
    /// A bug inside the library; the handle arguments are left untouched.
    Panic = 8,
}

/// A binary vessel mask with its voxel spacing.
pub struct CaravelVolume(VoxelVolume);

/// Global and per-territory features of one mask.
pub struct CaravelFeatures(SubjectFeatures);

struct Failure {
    status: CaravelStatus,
    message: String,
}

impl Failure {
    fn new(status: CaravelStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => CaravelStatus::Io,
            Error::Format { .. } | Error::Csv(_) | Error::Json(_) => CaravelStatus::Format,
            Error::DimensionMismatch { .. } => CaravelStatus::DimensionMismatch,
            Error::Undefined(_) => CaravelStatus::Undefined,
            _ => CaravelStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn guard(f: impl FnOnce() -> Outcome) -> CaravelStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CaravelStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {what}"));
            CaravelStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(CaravelStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn utf8<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(s, name)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::new(CaravelStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

unsafe fn run_config(json: *const c_char) -> Result<RunConfig, Failure> {
    if json.is_null() {
        return Ok(RunConfig::default());
    }
    let text = utf8(json, "config_json")?;
    serde_json::from_str(text)
        .map_err(|e| Failure::new(CaravelStatus::InvalidArgument, format!("invalid run configuration: {e}")))
}

unsafe fn subject(id: *const c_char) -> Result<String, Failure> {
    if id.is_null() {
        Ok("subject".into())
    } else {
        utf8(id, "subject_id").map(str::to_string)
    }
}

unsafe fn grid(dims: *const usize, spacing: *const f64) -> Result<([usize; 3], [f64; 3]), Failure> {
    non_null(dims, "dims")?;
    non_null(spacing, "spacing")?;
    let d = std::slice::from_raw_parts(dims, 3);
    let s = std::slice::from_raw_parts(spacing, 3);
    Ok(([d[0], d[1], d[2]], [s[0], s[1], s[2]]))
}

fn voxel_count(dims: [usize; 3]) -> Result<usize, Failure> {
    dims.iter()
        .try_fold(1usize, |n, &d| n.checked_mul(d))
        .ok_or_else(|| Failure::new(CaravelStatus::InvalidArgument, format!("dims {dims:?} overflow")))
}

fn feature_names() -> &'static [CString] {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    NAMES.get_or_init(|| FEATURE_NAMES.iter().map(|n| CString::new(*n).unwrap()).collect())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn caravel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn caravel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Number of scalar features per scope.
#[no_mangle]
pub extern "C" fn caravel_feature_count() -> usize {
    FEATURE_NAMES.len()
}

/// Static name of feature `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn caravel_feature_name(index: usize) -> *const c_char {
    feature_names().get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// Loads a mask from a NIfTI (`.nii`, `.nii.gz`) or CVOL file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn caravel_volume_load(path: *const c_char, out: *mut *mut CaravelVolume) -> CaravelStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = utf8(path, "path")?;
        let vol = load_mask(Path::new(path))?;
        *out = Box::into_raw(Box::new(CaravelVolume(vol)));
        Ok(())
    })
}

/// Builds a mask from `dims[0]*dims[1]*dims[2]` bytes, x fastest, 0 or 1 each.
///
/// # Safety
/// `dims` and `spacing` must point to 3 values, `data` to the full voxel
/// count, and `out` must be writable. The data is copied.
#[no_mangle]
pub unsafe extern "C" fn caravel_volume_from_buffer(
    data: *const u8,
    dims: *const usize,
    spacing: *const f64,
    out: *mut *mut CaravelVolume,
) -> CaravelStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(data, "data")?;
        let (dims, spacing) = grid(dims, spacing)?;
        let n = voxel_count(dims)?;
        let vol = VoxelVolume::new(dims, spacing, std::slice::from_raw_parts(data, n).to_vec())?;
        *out = Box::into_raw(Box::new(CaravelVolume(vol)));
        Ok(())
    })
}

/// Grid size, spacing (mm) and foreground voxel count. Any output may be null.
///
/// # Safety
/// `volume` must be a live handle; non-null `dims` and `spacing` must hold 3
/// values and `foreground` 1.
#[no_mangle]
pub unsafe extern "C" fn caravel_volume_info(
    volume: *const CaravelVolume,
    dims: *mut usize,
    spacing: *mut f64,
    foreground: *mut usize,
) -> CaravelStatus {
    guard(|| {
        non_null(volume, "volume")?;
        let v = &(*volume).0;
        if !dims.is_null() {
            std::slice::from_raw_parts_mut(dims, 3).copy_from_slice(&v.dims());
        }
        if !spacing.is_null() {
            std::slice::from_raw_parts_mut(spacing, 3).copy_from_slice(&v.spacing());
        }
        if !foreground.is_null() {
            *foreground = v.count();
        }
        Ok(())
    })
}

/// Releases a volume; null is ignored.
///
/// # Safety
/// `volume` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn caravel_volume_free(volume: *mut CaravelVolume) {
    if !volume.is_null() {
        drop(Box::from_raw(volume));
    }
}

/// Global features of a mask. `config_json` (a run configuration as written
/// next to CLI outputs) and `subject_id` may be null for defaults.
///
/// # Safety
/// `volume` must be a live handle, string arguments NUL-terminated or null,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn caravel_extract(
    volume: *const CaravelVolume,
    config_json: *const c_char,
    subject_id: *const c_char,
    out: *mut *mut CaravelFeatures,
) -> CaravelStatus {
    guard(|| {
        non_null(volume, "volume")?;
        non_null(out, "out")?;
        let config = run_config(config_json)?;
        let id = subject(subject_id)?;
        let features = extract_features(&(*volume).0, &config)?;
        *out = Box::into_raw(Box::new(CaravelFeatures(SubjectFeatures::global_only(id, features))));
        Ok(())
    })
}

/// Global and per-territory features. `labels` holds one territory id per
/// voxel on the mask grid, x fastest; 0 is background.
///
/// # Safety
/// As [`caravel_extract`]; `labels` must hold `labels_len` values.
#[no_mangle]
pub unsafe extern "C" fn caravel_extract_regional(
    volume: *const CaravelVolume,
    labels: *const u32,
    labels_len: usize,
    config_json: *const c_char,
    subject_id: *const c_char,
    out: *mut *mut CaravelFeatures,
) -> CaravelStatus {
    guard(|| {
        non_null(volume, "volume")?;
        non_null(labels, "labels")?;
        non_null(out, "out")?;
        let mask = &(*volume).0;
        let config = run_config(config_json)?;
        let id = subject(subject_id)?;
        let n = voxel_count(mask.dims())?;
        if labels_len != n {
            return Err(Failure::new(
                CaravelStatus::DimensionMismatch,
                format!("{labels_len} labels for a mask of {n} voxels"),
            ));
        }
        let atlas = LabelVolume::new(mask.dims(), std::slice::from_raw_parts(labels, n).to_vec())?;
        let report = regional_features(mask, &atlas, &config)?;
        *out = Box::into_raw(Box::new(CaravelFeatures(SubjectFeatures::from_report(id, report))));
        Ok(())
    })
}

/// Number of territories reported (0 for a global-only extraction).
///
/// # Safety
/// `features` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn caravel_features_region_count(
    features: *const CaravelFeatures,
    count: *mut usize,
) -> CaravelStatus {
    guard(|| {
        non_null(features, "features")?;
        non_null(count, "count")?;
        *count = (*features).0.regions.len();
        Ok(())
    })
}

/// Territory id at `index`, ascending.
///
/// # Safety
/// `features` must be a live handle and `region_id` writable.
#[no_mangle]
pub unsafe extern "C" fn caravel_features_region_id(
    features: *const CaravelFeatures,
    index: usize,
    region_id: *mut u32,
) -> CaravelStatus {
    guard(|| {
        non_null(features, "features")?;
        non_null(region_id, "region_id")?;
        let regions = &(*features).0.regions;
        let (id, _) = regions.get(index).ok_or_else(|| {
            Failure::new(
                CaravelStatus::InvalidArgument,
                format!("region index {index} out of range ({} regions)", regions.len()),
            )
        })?;
        *region_id = *id;
        Ok(())
    })
}

/// One scalar feature of a scope: `region_id` 0 is the whole mask. Undefined
/// features write NaN and return `CARAVEL_STATUS_UNDEFINED` with the reason.
///
/// # Safety
/// `features` must be a live handle, `name` NUL-terminated and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn caravel_features_get(
    features: *const CaravelFeatures,
    region_id: u32,
    name: *const c_char,
    value: *mut f64,
) -> CaravelStatus {
    guard(|| {
        non_null(features, "features")?;
        non_null(value, "value")?;
        let name = utf8(name, "name")?;
        let f = &(*features).0;
        let scope = if region_id == 0 {
            &f.global
        } else {
            f.regions
                .iter()
                .find(|(id, _)| *id == region_id)
                .map(|(_, v)| v)
                .ok_or_else(|| Failure::new(CaravelStatus::InvalidArgument, format!("no region {region_id}")))?
        };
        let v = scope
            .get(name)
            .ok_or_else(|| Failure::new(CaravelStatus::UnknownFeature, format!("unknown feature `{name}`")))?;
        match v {
            Some(x) => {
                *value = x;
                Ok(())
            }
            None => {
                *value = f64::NAN;
                let reason = scope
                    .flags
                    .iter()
                    .find(|fl| fl.starts_with(name))
                    .cloned()
                    .unwrap_or_else(|| format!("{name}: undefined"));
                Err(Failure::new(CaravelStatus::Undefined, reason))
            }
        }
    })
}

/// JSON records for every scope, as written by `caravel extract`. Release
/// the string with [`caravel_string_free`].
///
/// # Safety
/// `features` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn caravel_features_to_json(
    features: *const CaravelFeatures,
    json: *mut *mut c_char,
) -> CaravelStatus {
    guard(|| {
        non_null(features, "features")?;
        non_null(json, "json")?;
        let text = (*features).0.to_json()?;
        let c = CString::new(text).map_err(|e| Failure::new(CaravelStatus::Format, e.to_string()))?;
        *json = c.into_raw();
        Ok(())
    })
}

/// Releases a feature set; null is ignored.
///
/// # Safety
/// `features` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn caravel_features_free(features: *mut CaravelFeatures) {
    if !features.is_null() {
        drop(Box::from_raw(features));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn caravel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
