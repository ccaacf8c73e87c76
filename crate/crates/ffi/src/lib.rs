//! C ABI over `neo-core`: load a model bundle, score single records, compute
//! ROC AUC.
//!
//! Every fallible function returns a [`NeoStatus`]; on failure a description
//! is available from [`neo_last_error_message`] on the same thread. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use neo_core::bundle::ModelBundle;
use neo_core::data::{FeatureRecord, Peptide, NUM_FEATURES};
use neo_core::error::{EXIT_CONFIG, EXIT_DATA};
use neo_core::metrics::roc_auc;
use neo_core::NeoError;

/// Number of numeric features expected by [`neo_predict`].
pub const NEO_NUM_FEATURES: usize = 8;

const _: () = assert!(NEO_NUM_FEATURES == NUM_FEATURES);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeoStatus {
    Ok = 0,
    NullArgument = 1,
    Config = 2,
    Data = 3,
    Runtime = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

/// Opaque handle to a loaded model bundle.
pub struct NeoBundle {
    inner: ModelBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let s = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(e: NeoError) -> NeoStatus {
    set_error(e.to_string());
    match e.exit_code() {
        EXIT_CONFIG => NeoStatus::Config,
        EXIT_DATA => NeoStatus::Data,
        _ => NeoStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> NeoStatus) -> NeoStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            NeoStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, NeoStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(NeoStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        NeoStatus::InvalidUtf8
    })
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn neo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn neo_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Load a bundle file. On success `*out` owns a handle to release with
/// [`neo_bundle_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neo_bundle_load(
    path: *const c_char,
    out: *mut *mut NeoBundle,
) -> NeoStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return NeoStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ModelBundle::load(Path::new(path)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(NeoBundle { inner }));
                NeoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a handle from [`neo_bundle_load`]. Null is ignored.
///
/// # Safety
/// `bundle` must be null or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn neo_bundle_free(bundle: *mut NeoBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Decision threshold stored in the bundle.
///
/// # Safety
/// `bundle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neo_bundle_threshold(
    bundle: *const NeoBundle,
    out: *mut f64,
) -> NeoStatus {
    guard(|| {
        if bundle.is_null() || out.is_null() {
            set_error("bundle and out must be non-null");
            return NeoStatus::NullArgument;
        }
        *out = (*bundle).inner.ensemble.threshold;
        NeoStatus::Ok
    })
}

/// Score one candidate. `numeric` points to [`NEO_NUM_FEATURES`] values in
/// schema order; NaN marks a missing value.
///
/// # Safety
/// String arguments must be NUL-terminated; `numeric` must point to
/// `NEO_NUM_FEATURES` readable doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn neo_predict(
    bundle: *const NeoBundle,
    peptide_mut: *const c_char,
    peptide_wt: *const c_char,
    hla: *const c_char,
    numeric: *const f64,
    out_probability: *mut f64,
    out_label: *mut u8,
) -> NeoStatus {
    guard(|| {
        if bundle.is_null() || numeric.is_null() || out_probability.is_null() || out_label.is_null()
        {
            set_error("bundle, numeric and outputs must be non-null");
            return NeoStatus::NullArgument;
        }
        let (m, w, h) = match (
            str_arg(peptide_mut, "peptide_mut"),
            str_arg(peptide_wt, "peptide_wt"),
            str_arg(hla, "hla"),
        ) {
            (Ok(m), Ok(w), Ok(h)) => (m, w, h),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        let values = std::slice::from_raw_parts(numeric, NEO_NUM_FEATURES);
        let mut num = [None; NUM_FEATURES];
        for (dst, &v) in num.iter_mut().zip(values) {
            *dst = (!v.is_nan()).then_some(v);
        }
        let record = match (Peptide::parse(m), Peptide::parse(w)) {
            (Ok(peptide_mut), Ok(peptide_wt)) => FeatureRecord {
                id: String::new(),
                peptide_mut,
                peptide_wt,
                hla: h.to_string(),
                numeric: num,
                label: 0,
            },
            (Err(e), _) | (_, Err(e)) => return fail(e),
        };
        match (*bundle)
            .inner
            .predict_records(std::slice::from_ref(&record))
        {
            Ok(p) => {
                *out_probability = p[0].probability;
                *out_label = p[0].label;
                NeoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Area under the ROC curve of `scores` against 0/1 `labels`.
///
/// # Safety
/// `scores` and `labels` must each point to `n` readable values; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn neo_roc_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> NeoStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            set_error("scores, labels and out must be non-null");
            return NeoStatus::NullArgument;
        }
        let s = std::slice::from_raw_parts(scores, n);
        let y = std::slice::from_raw_parts(labels, n);
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            set_error(format!("label {bad} is not 0 or 1"));
            return NeoStatus::Data;
        }
        match roc_auc(s, y) {
            Ok(a) => {
                *out = a;
                NeoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
