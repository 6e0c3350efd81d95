//! C ABI over `har-core`.
//!
//! Every fallible function returns a [`HarStatus`]; on failure a message is
//! available from [`har_last_error`] on the same thread. Models are opaque
//! [`HarModel`] handles created by `har_model_load*` and released with
//! [`har_model_free`]. A loaded model is immutable and may be used from
//! several threads at once.
//!
//! The header `include/har.h` is generated from this file at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use har_core::features::pearson;
use har_core::lstm::{load_model, model_from_json, LoadError, LstmModel};
use har_core::sensor::{euler_to_quaternion, gravity_from_euler, hamilton_product, quaternion_inverse, MotionType};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    ShapeMismatch = 5,
    Undefined = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

/// Opaque trained model.
pub struct HarModel {
    inner: LstmModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: HarStatus, message: impl Into<String>) -> HarStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> HarStatus) -> HarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == HarStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => fail(HarStatus::Panic, "internal panic"),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn har_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn har_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn load_status(e: &LoadError) -> HarStatus {
    match e {
        LoadError::Io(_) => HarStatus::Io,
        LoadError::Shape { .. } => HarStatus::ShapeMismatch,
        _ => HarStatus::Format,
    }
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, HarStatus> {
    if s.is_null() {
        return Err(fail(HarStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(HarStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn store_model(out: *mut *mut HarModel, result: Result<LstmModel, LoadError>) -> HarStatus {
    match result {
        Ok(inner) => {
            // SAFETY: caller checked `out` for NULL.
            unsafe { *out = Box::into_raw(Box::new(HarModel { inner })) };
            HarStatus::Ok
        }
        Err(e) => fail(load_status(&e), e.to_string()),
    }
}

/// Loads a model file written by `har train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn har_model_load(path: *const c_char, out: *mut *mut HarModel) -> HarStatus {
    guard(|| {
        if out.is_null() {
            return fail(HarStatus::NullPointer, "out is NULL");
        }
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        store_model(out, load_model(Path::new(path)))
    })
}

/// Loads a model from an in-memory JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn har_model_load_json(json: *const c_char, out: *mut *mut HarModel) -> HarStatus {
    guard(|| {
        if out.is_null() {
            return fail(HarStatus::NullPointer, "out is NULL");
        }
        let text = match c_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        store_model(out, model_from_json(text))
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from `har_model_load*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn har_model_free(model: *mut HarModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const HarModel) -> Result<&'a LstmModel, HarStatus> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| fail(HarStatus::NullPointer, "model is NULL"))
}

/// Window length T expected by [`har_model_predict`].
///
/// # Safety
/// `model` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn har_model_window_len(model: *const HarModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.config.window)
}

/// Number of feature columns F.
///
/// # Safety
/// `model` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn har_model_feature_count(model: *const HarModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.config.input_features)
}

/// Number of output classes.
///
/// # Safety
/// `model` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn har_model_class_count(model: *const HarModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.config.classes)
}

/// Copies the name of feature column `index` into `buf` (NUL-terminated).
/// `required` receives the buffer size needed including the terminator.
///
/// # Safety
/// `buf` must hold `buf_len` bytes; `required` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn har_model_feature_name(
    model: *const HarModel,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    required: *mut usize,
) -> HarStatus {
    guard(|| {
        let m = match model_ref(model) {
            Ok(m) => m,
            Err(s) => return s,
        };
        let Some(name) = m.features.get(index) else {
            return fail(HarStatus::InvalidArgument, format!("feature index {index} out of range"));
        };
        let need = name.len() + 1;
        if !required.is_null() {
            *required = need;
        }
        if buf.is_null() || buf_len < need {
            return fail(HarStatus::BufferTooSmall, format!("need {need} bytes"));
        }
        ptr::copy_nonoverlapping(name.as_ptr(), buf.cast::<u8>(), name.len());
        *buf.add(name.len()) = 0;
        HarStatus::Ok
    })
}

/// Classifies one raw window of `len = T × F` values (row-major, columns in
/// the model's feature order). Writes the winning class index and its
/// probability; when `probs` is non-NULL it receives all class
/// probabilities and must hold `probs_len >= class count` values.
///
/// # Safety
/// `values` must hold `len` doubles; output pointers must be valid or NULL
/// where allowed.
#[no_mangle]
pub unsafe extern "C" fn har_model_predict(
    model: *const HarModel,
    values: *const f64,
    len: usize,
    out_class: *mut usize,
    out_probability: *mut f64,
    probs: *mut f64,
    probs_len: usize,
) -> HarStatus {
    guard(|| {
        let m = match model_ref(model) {
            Ok(m) => m,
            Err(s) => return s,
        };
        if values.is_null() || out_class.is_null() || out_probability.is_null() {
            return fail(HarStatus::NullPointer, "values, out_class and out_probability are required");
        }
        let window = std::slice::from_raw_parts(values, len);
        let prediction = match m.predict(window, &m.features) {
            Ok(p) => p,
            Err(e) => return fail(HarStatus::ShapeMismatch, e.to_string()),
        };
        if !probs.is_null() {
            if probs_len < prediction.probabilities.len() {
                return fail(HarStatus::BufferTooSmall, format!("probs needs {} slots", prediction.probabilities.len()));
            }
            ptr::copy_nonoverlapping(prediction.probabilities.as_ptr(), probs, prediction.probabilities.len());
        }
        *out_class = prediction.class;
        *out_probability = prediction.probability;
        HarStatus::Ok
    })
}

/// Snake-case motion name of class `index`, or NULL when out of range.
#[no_mangle]
pub extern "C" fn har_motion_name(index: usize) -> *const c_char {
    const NAMES: [&str; MotionType::COUNT] = [
        "overhead_press\0",
        "bicep_curls\0",
        "lateral_raise\0",
        "overhead_triceps\0",
        "diagonal_shoulder_raise\0",
        "forward_punches\0",
        "reverse_fly\0",
        "seated_rows\0",
        "modified_skull_crushers\0",
    ];
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr().cast())
}

unsafe fn read_array<const N: usize>(p: *const f64, what: &str) -> Result<[f64; N], HarStatus> {
    if p.is_null() {
        return Err(fail(HarStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::ptr::read(p.cast::<[f64; N]>()))
}

unsafe fn write_array<const N: usize>(out: *mut f64, v: [f64; N]) -> HarStatus {
    if out.is_null() {
        return fail(HarStatus::NullPointer, "out is NULL");
    }
    std::ptr::write(out.cast::<[f64; N]>(), v);
    HarStatus::Ok
}

/// Intrinsic Z-Y-X Euler angles `[roll, pitch, yaw]` (radians) to a unit
/// quaternion `[x, y, z, w]` with `w >= 0`.
///
/// # Safety
/// `euler` must hold 3 doubles and `out` 4.
#[no_mangle]
pub unsafe extern "C" fn har_euler_to_quaternion(euler: *const f64, out: *mut f64) -> HarStatus {
    guard(|| {
        let e = match read_array::<3>(euler, "euler") {
            Ok(e) => e,
            Err(s) => return s,
        };
        match euler_to_quaternion(e) {
            Ok(q) => write_array(out, q),
            Err(err) => fail(HarStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Quaternion inverse (conjugate over squared norm).
///
/// # Safety
/// `q` and `out` must each hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn har_quaternion_inverse(q: *const f64, out: *mut f64) -> HarStatus {
    guard(|| {
        let q = match read_array::<4>(q, "q") {
            Ok(q) => q,
            Err(s) => return s,
        };
        match quaternion_inverse(q) {
            Ok(inv) => write_array(out, inv),
            Err(err) => fail(HarStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Hamilton product `a ⊗ b` of `[x, y, z, w]` quaternions.
///
/// # Safety
/// `a`, `b` and `out` must each hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn har_hamilton_product(a: *const f64, b: *const f64, out: *mut f64) -> HarStatus {
    guard(|| {
        let (a, b) = match (read_array::<4>(a, "a"), read_array::<4>(b, "b")) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        write_array(out, hamilton_product(a, b))
    })
}

/// Gravity vector in the device frame for Euler angles and magnitude `g`.
///
/// # Safety
/// `euler` and `out` must each hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn har_gravity_from_euler(euler: *const f64, g: f64, out: *mut f64) -> HarStatus {
    guard(|| {
        let e = match read_array::<3>(euler, "euler") {
            Ok(e) => e,
            Err(s) => return s,
        };
        match gravity_from_euler(e, g) {
            Ok(v) => write_array(out, v),
            Err(err) => fail(HarStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Pearson correlation of two series of `len` values. Returns
/// `HAR_STATUS_UNDEFINED` when either series is constant.
///
/// # Safety
/// `x` and `y` must each hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn har_pearson(x: *const f64, y: *const f64, len: usize, out: *mut f64) -> HarStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return fail(HarStatus::NullPointer, "x, y and out are required");
        }
        let (xs, ys) = (std::slice::from_raw_parts(x, len), std::slice::from_raw_parts(y, len));
        match pearson(xs, ys) {
            Ok(r) => {
                *out = r;
                HarStatus::Ok
            }
            Err(e @ har_core::features::FeatureError::ZeroVariance(_)) => fail(HarStatus::Undefined, e.to_string()),
            Err(e) => fail(HarStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motion_names_match_core() {
        for m in MotionType::ALL {
            let name = unsafe { CStr::from_ptr(har_motion_name(m.index())) };
            assert_eq!(name.to_str().unwrap(), m.as_str());
        }
        assert!(har_motion_name(MotionType::COUNT).is_null());
    }

    #[test]
    fn error_message_is_thread_local_and_cleared() {
        let mut out = [0.0; 4];
        let status = unsafe { har_quaternion_inverse([0.0; 4].as_ptr(), out.as_mut_ptr()) };
        assert_eq!(status, HarStatus::InvalidArgument);
        assert!(!har_last_error().is_null());
        std::thread::spawn(|| assert!(har_last_error().is_null())).join().unwrap();
        let status = unsafe { har_quaternion_inverse([0.0, 0.0, 0.0, 2.0].as_ptr(), out.as_mut_ptr()) };
        assert_eq!(status, HarStatus::Ok);
        assert_eq!(out, [0.0, 0.0, 0.0, 0.5]);
        assert!(har_last_error().is_null());
    }
}
