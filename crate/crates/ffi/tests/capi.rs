use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mdi_ffi::*;

fn data(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = mdi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn load_perturb_impute_round_trip() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(mdi_dataset_load_uci(data("house-votes-84.data").as_ptr(), c("cvrs").as_ptr(), &mut ds), MdiStatus::Ok);
        let (mut rows, mut cols) = (0usize, 0usize);
        assert_eq!(mdi_dataset_shape(ds, &mut rows, &mut cols), MdiStatus::Ok);
        assert_eq!((rows, cols), (435, 16));

        let mut perturbed = ptr::null_mut();
        assert_eq!(mdi_perturb(ds, c("mcar").as_ptr(), 0.2, 7, &mut perturbed), MdiStatus::Ok);
        let mut missing = 0usize;
        assert_eq!(mdi_dataset_missing_count(perturbed, &mut missing), MdiStatus::Ok);
        assert_eq!(missing, 1392); // round(0.2 * 435 * 16)

        let mut imputed = ptr::null_mut();
        assert_eq!(mdi_impute(perturbed, perturbed, c("knn").as_ptr(), 3, 7, &mut imputed), MdiStatus::Ok);
        assert_eq!(mdi_dataset_missing_count(imputed, &mut missing), MdiStatus::Ok);
        assert_eq!(missing, 0);

        let dir = tempfile::tempdir().unwrap();
        let path = c(dir.path().join("out.mdi").to_str().unwrap());
        assert_eq!(mdi_dataset_write(imputed, path.as_ptr()), MdiStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(mdi_dataset_read(path.as_ptr(), &mut back), MdiStatus::Ok);
        assert_eq!(mdi_dataset_shape(back, &mut rows, &mut cols), MdiStatus::Ok);
        assert_eq!(rows, 435);

        let mut json = ptr::null_mut();
        assert_eq!(mdi_dataset_pattern_json(ds, &mut json), MdiStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        mdi_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["n_rows"], 435);

        for h in [ds, perturbed, imputed, back] {
            mdi_dataset_free(h);
        }
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(mdi_dataset_read(ptr::null(), &mut ds), MdiStatus::NullPointer);
        assert!(last_error().contains("path"));

        assert_eq!(mdi_dataset_read(c("/nonexistent/file").as_ptr(), &mut ds), MdiStatus::Io);
        assert!(ds.is_null());

        assert_eq!(
            mdi_dataset_load_uci(data("house-votes-84.data").as_ptr(), c("iris").as_ptr(), &mut ds),
            MdiStatus::InvalidArgument
        );
        assert!(last_error().contains("iris"));

        let mut rows = 0usize;
        assert_eq!(mdi_dataset_shape(ptr::null(), &mut rows, &mut rows), MdiStatus::NullPointer);
        mdi_dataset_free(ptr::null_mut());
        mdi_string_free(ptr::null_mut());
    }
}

#[test]
fn out_of_range_delta_is_rejected() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(mdi_dataset_load_uci(data("house-votes-84.data").as_ptr(), c("cvrs").as_ptr(), &mut ds), MdiStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(mdi_perturb(ds, c("mcar").as_ptr(), 1.5, 0, &mut out), MdiStatus::InvalidArgument);
        assert!(out.is_null());
        mdi_dataset_free(ds);
    }
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/mdi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "mdi_last_error",
        "mdi_dataset_load_uci",
        "mdi_dataset_read",
        "mdi_dataset_write",
        "mdi_dataset_free",
        "mdi_dataset_shape",
        "mdi_dataset_missing_count",
        "mdi_dataset_pattern_json",
        "mdi_perturb",
        "mdi_impute",
        "mdi_string_free",
        "MDI_STATUS_OK",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    // syntax check only where a C compiler exists
    if let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    {
        assert!(status.success());
    }
}
