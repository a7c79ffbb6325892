//! C ABI for dlsat.
//!
//! Datasets and models cross the boundary as opaque handles. Every fallible
//! call returns a [`DlsatStatus`]; on failure a human readable message is
//! kept per thread and can be fetched with [`dlsat_last_error`]. Strings
//! handed out by the library must be released with [`dlsat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thiserror::Error;

use dlsat::dataset::{load_csv, one_hot, parse_csv, quantize, ClassColumn, DatasetError, RawDataset};
use dlsat::encoder::{encode_perfect, encode_sparse, EncodeError};
use dlsat::maxsat::wcnf::write_wcnf;
use dlsat::metrics::{accuracy, MetricsError};
use dlsat::model::ModelError;
use dlsat::trainer::{train_perfect, train_sparse, NSchedule, TrainError};
use dlsat::{BinDataset, BuiltinSolver, DecisionList, SparseConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlsatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The CSV could not be read or binarized.
    Data = 3,
    /// Identical feature rows carry different classes.
    Inconsistent = 4,
    /// No perfect list within the node cap.
    NodeLimit = 5,
    Timeout = 6,
    Solver = 7,
    /// Malformed model JSON or a model that does not fit the input.
    Model = 8,
    /// The list has no default rule and nothing fired.
    NoRuleFired = 9,
    Panic = 10,
}

/// Binarized training data.
pub struct DlsatDataset {
    data: BinDataset,
}

/// A learned decision list.
pub struct DlsatModel {
    list: DecisionList,
}

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer passed as `{0}`")]
    Null(&'static str),
    #[error("`{0}` is not valid UTF-8")]
    Utf8(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no rule fired for the given features")]
    NoRuleFired,
}

impl FfiError {
    fn status(&self) -> DlsatStatus {
        match self {
            FfiError::Null(_) => DlsatStatus::NullPointer,
            FfiError::Utf8(_) | FfiError::Invalid(_) => DlsatStatus::InvalidArgument,
            FfiError::Data(_) => DlsatStatus::Data,
            FfiError::Encode(EncodeError::Inconsistent(_)) => DlsatStatus::Inconsistent,
            FfiError::Encode(_) => DlsatStatus::InvalidArgument,
            FfiError::Train(e) => train_status(e),
            FfiError::Model(_) | FfiError::Metrics(_) => DlsatStatus::Model,
            FfiError::NoRuleFired => DlsatStatus::NoRuleFired,
        }
    }
}

fn train_status(e: &TrainError) -> DlsatStatus {
    match e {
        TrainError::Inconsistent(_) | TrainError::Encode(EncodeError::Inconsistent(_)) => {
            DlsatStatus::Inconsistent
        }
        TrainError::NodeLimit { .. } => DlsatStatus::NodeLimit,
        TrainError::Timeout { .. } => DlsatStatus::Timeout,
        TrainError::Segment { source, .. } => train_status(source),
        TrainError::Solve(_) => DlsatStatus::Solver,
        TrainError::Model(_) => DlsatStatus::Model,
        _ => DlsatStatus::InvalidArgument,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

/// Runs `body`, records its error and turns panics into [`DlsatStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<(), FfiError>) -> DlsatStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DlsatStatus::Ok,
        Ok(Err(e)) => {
            let status = e.status();
            set_error(e.to_string());
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {what}"));
            DlsatStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(name))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(name))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(name))
}

fn class_column(p: *const c_char) -> Result<ClassColumn, FfiError> {
    if p.is_null() {
        return Ok(ClassColumn::Last);
    }
    let text = unsafe { str_arg(p, "class_column")? };
    let Ok(column) = text.parse::<ClassColumn>();
    Ok(column)
}

fn binarize(raw: RawDataset, intervals: usize) -> Result<Box<DlsatDataset>, FfiError> {
    let raw = match intervals {
        0 => raw,
        k => quantize(&raw, k)?,
    };
    Ok(Box::new(DlsatDataset { data: one_hot(&raw)? }))
}

fn into_c_string(text: String) -> *mut c_char {
    CString::new(text).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn dlsat_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Reads and binarizes a CSV file.
///
/// `class_column` may be NULL (last column), a header name, a zero-based
/// index or `"last"`. `intervals` > 0 quantizes numeric columns into that
/// many equal-width bins first.
///
/// # Safety
/// `path` and a non-NULL `class_column` must be NUL-terminated strings and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_dataset_load_csv(
    path: *const c_char,
    class_column: *const c_char,
    intervals: usize,
    out: *mut *mut DlsatDataset,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let raw = load_csv(str_arg(path, "path")?, &self::class_column(class_column)?)?;
        *out = Box::into_raw(binarize(raw, intervals)?);
        Ok(())
    })
}

/// Like [`dlsat_dataset_load_csv`] but parses CSV text held in memory.
///
/// # Safety
/// Same contract as [`dlsat_dataset_load_csv`], with `text` in place of `path`.
#[no_mangle]
pub unsafe extern "C" fn dlsat_dataset_parse_csv(
    text: *const c_char,
    class_column: *const c_char,
    intervals: usize,
    out: *mut *mut DlsatDataset,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let raw = parse_csv(str_arg(text, "text")?, &self::class_column(class_column)?)?;
        *out = Box::into_raw(binarize(raw, intervals)?);
        Ok(())
    })
}

/// Number of instances; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn dlsat_dataset_rows(ds: *const DlsatDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.len())
}

/// Number of binary features; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn dlsat_dataset_features(ds: *const DlsatDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.feature_count())
}

/// Number of classes; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn dlsat_dataset_classes(ds: *const DlsatDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.class_count())
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dlsat_dataset_free(ds: *mut DlsatDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Learns a minimum-size perfect decision list with the builtin solver.
///
/// `max_nodes` caps the node search; 0 keeps the default cap.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_train_perfect(
    ds: *const DlsatDataset,
    max_nodes: usize,
    out: *mut *mut DlsatModel,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = &ref_arg(ds, "ds")?.data;
        let mut schedule = NSchedule::for_classes(ds.class_count());
        if max_nodes > 0 {
            schedule.max_n = max_nodes;
            schedule.initial_n = schedule.initial_n.min(max_nodes);
        }
        let trained = train_perfect(ds, &schedule, &BuiltinSolver::default())?;
        *out = Box::into_raw(Box::new(DlsatModel { list: trained.list }));
        Ok(())
    })
}

/// Learns a list minimizing misclassifications plus `lambda * M` per node.
///
/// `lambda` must lie in (0, 1]. `nodes` fixes the node bound; 0 derives it.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_train_sparse(
    ds: *const DlsatDataset,
    lambda: f64,
    nodes: usize,
    out: *mut *mut DlsatModel,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = &ref_arg(ds, "ds")?.data;
        let cfg = SparseConfig::new(lambda, ds.len())?;
        let n = (nodes > 0).then_some(nodes);
        let trained = train_sparse(ds, &cfg, n, &BuiltinSolver::default())?;
        *out = Box::into_raw(Box::new(DlsatModel {
            list: trained.trained.list,
        }));
        Ok(())
    })
}

/// Classifies one binary feature vector (`0` false, anything else true).
///
/// # Safety
/// `features` must point to `len` readable bytes and `class_out` be writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_predict(
    model: *const DlsatModel,
    features: *const u8,
    len: usize,
    class_out: *mut usize,
) -> DlsatStatus {
    guard(|| {
        let list = &ref_arg(model, "model")?.list;
        let class_out = out_arg(class_out, "class_out")?;
        if features.is_null() && len > 0 {
            return Err(FfiError::Null("features"));
        }
        let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(features, len) };
        let width = list.schema.feature_names.len();
        if len != width {
            return Err(FfiError::Invalid(format!(
                "model expects {width} features, got {len}"
            )));
        }
        let row: Vec<bool> = bytes.iter().map(|&b| b != 0).collect();
        let (class, _) = list.predict(&row)?.ok_or(FfiError::NoRuleFired)?;
        *class_out = class;
        Ok(())
    })
}

/// Fraction of `ds` the model classifies correctly.
///
/// # Safety
/// `model` and `ds` must be live handles and `accuracy_out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_accuracy(
    model: *const DlsatModel,
    ds: *const DlsatDataset,
    accuracy_out: *mut f64,
) -> DlsatStatus {
    guard(|| {
        let list = &ref_arg(model, "model")?.list;
        let ds = &ref_arg(ds, "ds")?.data;
        let acc_out = out_arg(accuracy_out, "accuracy_out")?;
        if ds.feature_count() != list.schema.feature_names.len() {
            return Err(FfiError::Invalid("dataset and model feature counts differ".into()));
        }
        *acc_out = accuracy(list, ds)?;
        Ok(())
    })
}

/// Total literal count; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_size(model: *const DlsatModel) -> usize {
    model.as_ref().map_or(0, |m| m.list.size())
}

/// Number of rules; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_rule_count(model: *const DlsatModel) -> usize {
    model.as_ref().map_or(0, |m| m.list.rules.len())
}

/// Serializes the model; free the result with [`dlsat_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_to_json(
    model: *const DlsatModel,
    out: *mut *mut c_char,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = into_c_string(ref_arg(model, "model")?.list.to_json());
        Ok(())
    })
}

/// Human readable "if ... then ..." rendering of the model.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_to_text(
    model: *const DlsatModel,
    out: *mut *mut c_char,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = into_c_string(ref_arg(model, "model")?.list.to_string());
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_from_json(
    json: *const c_char,
    out: *mut *mut DlsatModel,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let list = DecisionList::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(DlsatModel { list }));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dlsat_model_free(model: *mut DlsatModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the WCNF formula for `nodes` nodes as DIMACS text.
///
/// `lambda` <= 0 selects the perfect encoding, otherwise the sparse one.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dlsat_encode_wcnf(
    ds: *const DlsatDataset,
    nodes: usize,
    lambda: f64,
    out: *mut *mut c_char,
) -> DlsatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = &ref_arg(ds, "ds")?.data;
        let enc = if lambda > 0.0 {
            encode_sparse(ds, nodes, &SparseConfig::new(lambda, ds.len())?)?
        } else {
            encode_perfect(ds, nodes)?
        };
        let mut text = Vec::new();
        write_wcnf(&enc.formula, &mut text).map_err(|e| FfiError::Invalid(e.to_string()))?;
        let text = String::from_utf8(text).map_err(|e| FfiError::Invalid(e.to_string()))?;
        *out = into_c_string(text);
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dlsat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
