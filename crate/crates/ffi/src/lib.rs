//! C ABI over `effort_core`.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`EffortStatus`]; on failure `effort_last_error` describes the problem
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use effort_core::datasets::{builtin, load_csv, Dataset, DatasetDescriptor};
use effort_core::learners::{CartConfig, CartTree, Estimator};
use effort_core::metrics;
use effort_core::tuners::{flash_tune, validation_split, FlashParams, TuneObjective};
use effort_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffortStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericError = 4,
    NetworkError = 5,
    Panic = 6,
}

/// Loaded dataset.
pub struct EffortDataset(Dataset);

/// Trained estimator.
pub struct EffortModel(Box<dyn Estimator>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> EffortStatus {
    match err {
        e if e.is_network() => EffortStatus::NetworkError,
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => EffortStatus::InvalidArgument,
        Error::CollinearPredictors
        | Error::CalibrationUnderdetermined
        | Error::Infeasible
        | Error::Unbounded => EffortStatus::NumericError,
        _ => EffortStatus::DataError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EffortStatus, String)>) -> EffortStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EffortStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EffortStatus::Panic
        }
    }
}

fn core<T>(r: effort_core::Result<T>) -> Result<T, (EffortStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (EffortStatus, String) {
    (EffortStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EffortStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EffortStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn effort_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn effort_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a bundled dataset by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effort_dataset_builtin(name: *const c_char, out: *mut *mut EffortDataset) -> EffortStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = core(builtin(text(name, "name")?))?;
        *out = Box::into_raw(Box::new(EffortDataset(data)));
        Ok(())
    })
}

/// Loads a CSV file described by a schema sidecar.
///
/// # Safety
/// Both paths must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effort_dataset_load(
    csv_path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut EffortDataset,
) -> EffortStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let csv = text(csv_path, "csv_path")?;
        let schema = text(schema_path, "schema_path")?;
        let descriptor = core(DatasetDescriptor::from_file(Path::new(schema)))?;
        let data = core(load_csv(Path::new(csv), &descriptor))?;
        *out = Box::into_raw(Box::new(EffortDataset(data)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn effort_dataset_free(dataset: *mut EffortDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn effort_dataset_rows(dataset: *const EffortDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n_rows())
}

/// Number of predictor columns; 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn effort_dataset_cols(dataset: *const EffortDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n_features())
}

/// Trains a regression tree. `max_depth` of 0 means unbounded.
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effort_cart_train(
    dataset: *const EffortDataset,
    max_features_fraction: f64,
    max_depth: usize,
    min_sample_split: usize,
    min_samples_leaf: usize,
    seed: u64,
    out: *mut *mut EffortModel,
) -> EffortStatus {
    guard(|| {
        let data = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = CartConfig {
            max_features_fraction,
            max_depth: (max_depth > 0).then_some(max_depth),
            min_sample_split,
            min_samples_leaf,
        };
        let tree = core(CartTree::train(&data.0, &config, seed))?;
        *out = Box::into_raw(Box::new(EffortModel(Box::new(tree))));
        Ok(())
    })
}

/// Tunes a tree with FLASH on a validation split, then refits it on the
/// whole dataset.
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effort_rome_tune(
    dataset: *const EffortDataset,
    budget: usize,
    seed: u64,
    out: *mut *mut EffortModel,
) -> EffortStatus {
    guard(|| {
        let data = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (fit, validation) = core(validation_split(&data.0, seed))?;
        let mut objective = core(TuneObjective::new(&fit, &validation, seed))?;
        let params = FlashParams {
            budget,
            ..FlashParams::default()
        };
        let outcome = core(flash_tune(&mut objective, &params, seed))?;
        let tree = core(CartTree::train(&data.0, &outcome.best, seed))?;
        *out = Box::into_raw(Box::new(EffortModel(Box::new(tree))));
        Ok(())
    })
}

/// Predicts one row of `len` predictor values.
///
/// # Safety
/// `model` must be a live handle, `row` must point to `len` doubles and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effort_model_predict(
    model: *const EffortModel,
    row: *const f64,
    len: usize,
    out: *mut f64,
) -> EffortStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if row.is_null() && len > 0 {
            return Err(null("row"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let values = if len == 0 { &[][..] } else { std::slice::from_raw_parts(row, len) };
        *out = core(model.0.predict(values))?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn effort_model_free(model: *mut EffortModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Magnitude of relative error.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effort_mre(actual: f64, predicted: f64, out: *mut f64) -> EffortStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = core(metrics::mre(actual, predicted))?;
        Ok(())
    })
}
