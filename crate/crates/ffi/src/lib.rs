//! C ABI over `mdi-core`.
//!
//! Datasets cross the boundary as opaque `MdiDataset` handles. Every
//! fallible call returns an `MdiStatus`; on failure the message is available
//! from `mdi_last_error` on the same thread until the next failing call.
//! Strings returned to the caller are released with `mdi_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mdi_core::data::{load_uci_files, missing_pattern_summary, read_dataset_file, write_dataset_file, Dataset, Preset};
use mdi_core::impute::{self, ImputeMethod};
use mdi_core::perturb::{perturb, Mechanism, PerturbationSpec};
use mdi_core::Error;

/// Opaque dataset handle.
pub struct MdiDataset(Dataset);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    NoCompleteCases = 6,
    Schema = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MdiStatus {
    match e {
        Error::Io { .. } => MdiStatus::Io,
        Error::RowWidth { .. }
        | Error::BadNumber { .. }
        | Error::MissingLabel { .. }
        | Error::Format(_)
        | Error::Json(_)
        | Error::Csv(_) => MdiStatus::Parse,
        Error::NoCompleteCases => MdiStatus::NoCompleteCases,
        Error::Schema(_) | Error::UnknownCategory { .. } | Error::WidthMismatch { .. } => MdiStatus::Schema,
        _ => MdiStatus::InvalidArgument,
    }
}

struct Failure(MdiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MdiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MdiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MdiStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(MdiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MdiStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ds_arg<'a>(p: *const MdiDataset, what: &str) -> Result<&'a Dataset, Failure> {
    p.as_ref()
        .map(|d| &d.0)
        .ok_or_else(|| Failure(MdiStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(MdiStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

fn boxed(ds: Dataset) -> *mut MdiDataset {
    Box::into_raw(Box::new(MdiDataset(ds)))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse::<T>().map_err(Failure::from)
}

/// Message of the last failure on this thread, or null. Owned by the
/// library; valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn mdi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Load a UCI benchmark file with a preset layout ("adult" or "cvrs").
///
/// # Safety
/// `path` and `preset` must be nul-terminated strings; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_load_uci(
    path: *const c_char,
    preset: *const c_char,
    out: *mut *mut MdiDataset,
) -> MdiStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let preset: Preset = parse(str_arg(preset, "preset")?)?;
        let ds = load_uci_files(&[path.into()], &preset.options())?;
        put(out, boxed(ds))
    })
}

/// Read a dataset in the native format.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_read(path: *const c_char, out: *mut *mut MdiDataset) -> MdiStatus {
    guard(|| {
        let ds = read_dataset_file(Path::new(str_arg(path, "path")?))?;
        put(out, boxed(ds))
    })
}

/// Write a dataset in the native format, missing cells as `?`.
///
/// # Safety
/// `ds` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_write(ds: *const MdiDataset, path: *const c_char) -> MdiStatus {
    guard(|| {
        let ds = ds_arg(ds, "dataset")?;
        write_dataset_file(ds, "?", Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_free(ds: *mut MdiDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle; `rows` and `features` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_shape(ds: *const MdiDataset, rows: *mut usize, features: *mut usize) -> MdiStatus {
    guard(|| {
        let ds = ds_arg(ds, "dataset")?;
        put(rows, ds.n_rows())?;
        put(features, ds.n_features())
    })
}

/// # Safety
/// `ds` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_missing_count(ds: *const MdiDataset, out: *mut usize) -> MdiStatus {
    guard(|| put(out, ds_arg(ds, "dataset")?.missing_count()))
}

/// Missing-pattern summary as a JSON string, freed with `mdi_string_free`.
///
/// # Safety
/// `ds` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_dataset_pattern_json(ds: *const MdiDataset, out: *mut *mut c_char) -> MdiStatus {
    guard(|| {
        let report = missing_pattern_summary(ds_arg(ds, "dataset")?);
        let text = serde_json::to_string(&report).map_err(Error::from)?;
        let c = CString::new(text).map_err(|e| Failure(MdiStatus::Panic, e.to_string()))?;
        put(out, c.into_raw())
    })
}

/// Raise categorical missingness to `delta` under `mechanism` ("mcar" or
/// "mnar", the latter focused on each feature's mode). The input is left
/// unchanged.
///
/// # Safety
/// `ds` must be a live handle; `mechanism` a nul-terminated string; `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_perturb(
    ds: *const MdiDataset,
    mechanism: *const c_char,
    delta: f64,
    seed: u64,
    out: *mut *mut MdiDataset,
) -> MdiStatus {
    guard(|| {
        let ds = ds_arg(ds, "dataset")?;
        let spec = PerturbationSpec {
            mechanism: parse::<Mechanism>(str_arg(mechanism, "mechanism")?)?,
            delta,
            seed,
            mnar_focus: None,
        };
        let (perturbed, _) = perturb(ds, &spec)?;
        put(out, boxed(perturbed))
    })
}

/// Fit `method` on `train` and fill the missing cells of `target`. `k` is
/// used by "knn" only.
///
/// # Safety
/// `train` and `target` must be live handles; `method` a nul-terminated
/// string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_impute(
    train: *const MdiDataset,
    target: *const MdiDataset,
    method: *const c_char,
    k: usize,
    seed: u64,
    out: *mut *mut MdiDataset,
) -> MdiStatus {
    guard(|| {
        let train = ds_arg(train, "train")?;
        let target = ds_arg(target, "target")?;
        let method = parse::<ImputeMethod>(str_arg(method, "method")?)?.with_k(k);
        let model = impute::fit(method, train, seed)?;
        put(out, boxed(model.transform(target)?))
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
