use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use effort_core::datasets::builtin;
use effort_core::learners::{CartConfig, CartTree, Estimator};
use effort_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(effort_last_error()) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut EffortDataset {
    let name = CString::new(name).unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { effort_dataset_builtin(name.as_ptr(), &mut ds) }, EffortStatus::Ok);
    ds
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(effort_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn dataset_handles_report_shape() {
    let ds = load("albrecht");
    let data = builtin("albrecht").unwrap();
    unsafe {
        assert_eq!(effort_dataset_rows(ds), data.n_rows());
        assert_eq!(effort_dataset_cols(ds), data.n_features());
        assert_eq!(effort_dataset_rows(ptr::null()), 0);
        effort_dataset_free(ds);
        effort_dataset_free(ptr::null_mut());
    }
}

#[test]
fn cart_predictions_match_the_core_library() {
    let ds = load("kemerer");
    let data = builtin("kemerer").unwrap();
    let mut model = ptr::null_mut();
    let status = unsafe { effort_cart_train(ds, 1.0, 4, 2, 1, 9, &mut model) };
    assert_eq!(status, EffortStatus::Ok);
    let cfg = CartConfig {
        max_depth: Some(4),
        ..CartConfig::default()
    };
    let tree = CartTree::train(&data, &cfg, 9).unwrap();
    for i in 0..data.n_rows() {
        let row = data.row(i);
        let mut y = f64::NAN;
        let status = unsafe { effort_model_predict(model, row.as_ptr(), row.len(), &mut y) };
        assert_eq!(status, EffortStatus::Ok);
        assert_eq!(y, tree.predict(row).unwrap());
    }
    unsafe {
        effort_model_free(model);
        effort_dataset_free(ds);
    }
}

#[test]
fn tuned_model_predicts_within_training_range() {
    let ds = load("albrecht");
    let data = builtin("albrecht").unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { effort_rome_tune(ds, 40, 3, &mut model) }, EffortStatus::Ok);
    let lo = data.targets().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut y = 0.0;
    let row = data.row(0);
    assert_eq!(unsafe { effort_model_predict(model, row.as_ptr(), row.len(), &mut y) }, EffortStatus::Ok);
    assert!((lo..=hi).contains(&y));
    unsafe {
        effort_model_free(model);
        effort_dataset_free(ds);
    }
}

#[test]
fn failures_map_to_status_codes() {
    let mut ds = ptr::null_mut();
    let missing = CString::new("no_such_table").unwrap();
    assert_eq!(unsafe { effort_dataset_builtin(missing.as_ptr(), &mut ds) }, EffortStatus::InvalidArgument);
    assert!(last_error().contains("no_such_table"));
    assert_eq!(unsafe { effort_dataset_builtin(ptr::null(), &mut ds) }, EffortStatus::NullPointer);

    let path = CString::new("/nonexistent/data.csv").unwrap();
    let schema = CString::new("/nonexistent/data.toml").unwrap();
    assert_eq!(
        unsafe { effort_dataset_load(path.as_ptr(), schema.as_ptr(), &mut ds) },
        EffortStatus::DataError
    );

    let good = load("albrecht");
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { effort_cart_train(good, 2.0, 0, 2, 1, 0, &mut model) },
        EffortStatus::InvalidArgument
    );
    assert_eq!(unsafe { effort_cart_train(good, 1.0, 0, 2, 1, 0, &mut model) }, EffortStatus::Ok);
    assert_eq!(last_error(), "");
    let short = [1.0];
    let mut y = 0.0;
    assert_eq!(
        unsafe { effort_model_predict(model, short.as_ptr(), 1, &mut y) },
        EffortStatus::InvalidArgument
    );
    unsafe {
        effort_model_free(model);
        effort_dataset_free(good);
    }

    let mut m = 0.0;
    assert_eq!(unsafe { effort_mre(100.0, 50.0, &mut m) }, EffortStatus::Ok);
    assert_eq!(m, 0.5);
    assert_eq!(unsafe { effort_mre(0.0, 50.0, &mut m) }, EffortStatus::InvalidArgument);
    assert_eq!(unsafe { effort_mre(1.0, 1.0, ptr::null_mut()) }, EffortStatus::NullPointer);
}

#[test]
fn header_declares_every_export_and_compiles() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("effort.h")).unwrap();
    for name in [
        "effort_version",
        "effort_last_error",
        "effort_dataset_builtin",
        "effort_dataset_load",
        "effort_dataset_free",
        "effort_dataset_rows",
        "effort_dataset_cols",
        "effort_cart_train",
        "effort_rome_tune",
        "effort_model_predict",
        "effort_model_free",
        "effort_mre",
        "EFFORT_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from effort.h");
    }

    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("use_header.c");
    std::fs::write(
        &source,
        "#include \"effort.h\"\n\
         int main(void) {\n\
           EffortDataset *ds = 0;\n\
           EffortStatus s = effort_dataset_builtin(\"albrecht\", &ds);\n\
           effort_dataset_free(ds);\n\
           return s == EFFORT_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&source)
        .output()
    {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(e) => eprintln!("skipping C compile check: {cc}: {e}"),
    }
}
