//! C ABI over the `prro` library.
//!
//! Objects cross the boundary as opaque heap handles that the caller frees
//! with the matching `*_free` function. Every fallible call returns a
//! [`PrroStatus`]; on failure the message is available from
//! [`prro_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use prro::generator::{fit_chain, ChainConfig, ChainModel};
use prro::pipeline::load_input;
use prro::pruning::{prune_signal, spearman_rowcorr, PruningConfig};
use prro::reordering::{inverse_reorder, reorder_predictor_first, reorder_predictor_last, ColumnPermutation};
use prro::table::{positive_rate, save_csv, split, Dataset, SplitRatios};
use prro::PrroError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrroStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Configuration or usage problem.
    Config = 4,
    /// Input data failed validation.
    Data = 5,
    /// A pipeline stage failed.
    Stage = 6,
    /// The result is undefined (e.g. zero-variance correlation).
    Undefined = 7,
    Panic = 8,
}

/// Column layout requested from [`prro_reorder`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrroReorderMode {
    PredictorLast = 0,
    PredictorFirst = 1,
}

/// Loaded table together with its positive label.
pub struct PrroDataset {
    dataset: Dataset,
    positive: String,
}

pub struct PrroPermutation(ColumnPermutation);

pub struct PrroChainModel(ChainModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &PrroError) -> PrroStatus {
    match e.exit_code() {
        1 => PrroStatus::Config,
        2 => PrroStatus::Data,
        _ => PrroStatus::Stage,
    }
}

struct Fail(PrroStatus, String);

impl From<PrroError> for Fail {
    fn from(e: PrroError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PrroStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PrroStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PrroStatus::Panic
        }
    }
}

unsafe fn required_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PrroStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PrroStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        required_str(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(PrroStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(PrroStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn prro_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn prro_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a CSV. `label` and `positive` may be null when a schema sidecar
/// next to the file provides them.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_load(
    path: *const c_char,
    label: *const c_char,
    positive: *const c_char,
    out: *mut *mut PrroDataset,
) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let path = required_str(path, "path")?;
        let label = optional_str(label, "label")?;
        let positive = optional_str(positive, "positive")?;
        let t = load_input(Path::new(path), None, label, positive)?;
        *out = Box::into_raw(Box::new(PrroDataset {
            dataset: t.dataset,
            positive: t.positive,
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_free(ds: *mut PrroDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Row count, 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_n_rows(ds: *const PrroDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.dataset.n_rows())
}

/// Column count (label included), 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_n_columns(ds: *const PrroDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.dataset.schema().len())
}

/// Writes the position of the label column.
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_label_index(ds: *const PrroDataset, out: *mut usize) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = handle(ds, "dataset")?.dataset.schema().label_index();
        Ok(())
    })
}

/// Share of rows carrying the positive label.
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_positive_rate(ds: *const PrroDataset, out: *mut f64) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = handle(ds, "dataset")?;
        *out = positive_rate(&d.dataset, &d.positive)?.value();
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn prro_dataset_save(ds: *const PrroDataset, path: *const c_char) -> PrroStatus {
    guard(|| {
        let d = handle(ds, "dataset")?;
        save_csv(&d.dataset, Path::new(required_str(path, "path")?))?;
        Ok(())
    })
}

fn wrap(dataset: Dataset, positive: &str) -> *mut PrroDataset {
    Box::into_raw(Box::new(PrroDataset {
        dataset,
        positive: positive.to_string(),
    }))
}

/// Three-way split with the default 0.4/0.4/0.2 ratios.
///
/// # Safety
/// `ds` must be a live handle; all three out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn prro_split(
    ds: *const PrroDataset,
    seed: u64,
    stratified: bool,
    out_generator_train: *mut *mut PrroDataset,
    out_holdout: *mut *mut PrroDataset,
    out_validation: *mut *mut PrroDataset,
) -> PrroStatus {
    guard(|| {
        out_ptr(out_generator_train, "out_generator_train")?;
        out_ptr(out_holdout, "out_holdout")?;
        out_ptr(out_validation, "out_validation")?;
        let d = handle(ds, "dataset")?;
        let b = split(&d.dataset, SplitRatios::DEFAULT, seed, stratified)?;
        *out_generator_train = wrap(b.generator_train, &d.positive);
        *out_holdout = wrap(b.holdout, &d.positive);
        *out_validation = wrap(b.validation, &d.positive);
        Ok(())
    })
}

/// Signal-based pruning of the non-positive rows at threshold `tau`.
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_prune_signal(ds: *const PrroDataset, tau: f64, out: *mut *mut PrroDataset) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = handle(ds, "dataset")?;
        let cfg = PruningConfig::new(d.dataset.schema(), tau, d.positive.clone());
        let (pruned, _) = prune_signal(&d.dataset, &cfg)?;
        *out = wrap(pruned, &d.positive);
        Ok(())
    })
}

/// Moves the label last or first and returns the permutation record.
///
/// # Safety
/// `ds` must be a live handle; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn prro_reorder(
    ds: *const PrroDataset,
    mode: PrroReorderMode,
    out: *mut *mut PrroDataset,
    out_permutation: *mut *mut PrroPermutation,
) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        out_ptr(out_permutation, "out_permutation")?;
        let d = handle(ds, "dataset")?;
        let (r, p) = match mode {
            PrroReorderMode::PredictorLast => reorder_predictor_last(&d.dataset),
            PrroReorderMode::PredictorFirst => reorder_predictor_first(&d.dataset),
        };
        *out = wrap(r, &d.positive);
        *out_permutation = Box::into_raw(Box::new(PrroPermutation(p)));
        Ok(())
    })
}

/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_inverse_reorder(
    ds: *const PrroDataset,
    permutation: *const PrroPermutation,
    out: *mut *mut PrroDataset,
) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = handle(ds, "dataset")?;
        let p = handle(permutation, "permutation")?;
        *out = wrap(inverse_reorder(&d.dataset, &p.0)?, &d.positive);
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn prro_permutation_free(p: *mut PrroPermutation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes row `row` as a `name: value, ...` sentence. Free the string
/// with [`prro_string_free`].
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_encode_row(ds: *const PrroDataset, row: usize, out: *mut *mut c_char) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = handle(ds, "dataset")?;
        let r = d.dataset.rows().get(row).ok_or_else(|| {
            Fail(
                PrroStatus::InvalidArgument,
                format!("row {row} is out of range ({} rows)", d.dataset.n_rows()),
            )
        })?;
        let text = prro::encoding::encode_row(r, d.dataset.schema()).text;
        let c = CString::new(text).map_err(|_| Fail(PrroStatus::InvalidArgument, "row text contains NUL".into()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn prro_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_chain_fit(
    ds: *const PrroDataset,
    bins: usize,
    alpha: f64,
    out: *mut *mut PrroChainModel,
) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = handle(ds, "dataset")?;
        let m = fit_chain(&d.dataset, &ChainConfig { bins, alpha })?;
        *out = Box::into_raw(Box::new(PrroChainModel(m)));
        Ok(())
    })
}

/// Draws `n` rows. The result carries `positive` as its positive label
/// (null keeps the label's first category).
///
/// # Safety
/// `model` must be a live handle, `positive` null or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_chain_sample(
    model: *const PrroChainModel,
    n: usize,
    seed: u64,
    positive: *const c_char,
    out: *mut *mut PrroDataset,
) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let m = handle(model, "model")?;
        let d = m.0.sample(n, seed)?;
        let positive = match optional_str(positive, "positive")? {
            Some(p) => p.to_string(),
            None => d.schema().label().categories.first().cloned().unwrap_or_default(),
        };
        *out = wrap(d, &positive);
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn prro_chain_free(m: *mut PrroChainModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Spearman correlation of two equal-length vectors. Returns
/// `Undefined` when either vector is constant.
///
/// # Safety
/// `a` and `b` must point to `len` readable doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn prro_spearman(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        if a.is_null() || b.is_null() {
            return Err(Fail(PrroStatus::NullPointer, "input vector is null".into()));
        }
        let (a, b) = (std::slice::from_raw_parts(a, len), std::slice::from_raw_parts(b, len));
        match spearman_rowcorr(a, b).map_err(|e| Fail(PrroStatus::InvalidArgument, e.to_string()))? {
            Some(r) => {
                *out = r;
                Ok(())
            }
            None => Err(Fail(PrroStatus::Undefined, "a vector has zero rank variance".into())),
        }
    })
}

/// `(original - synthetic) / original`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prro_discount_rate(original_rate: f64, synthetic_rate: f64, out: *mut f64) -> PrroStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = prro::evaluation::discount_rate(original_rate, synthetic_rate)
            .map_err(|e| Fail(PrroStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
