use std::ffi::{c_void, CStr};
use std::ptr;
use std::sync::atomic::{AtomicUsize, Ordering};

use spe_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(spe_last_error()) }.to_string_lossy().into_owned()
}

fn checkerboard(n_min: usize, n_maj: usize, seed: u64) -> *mut SpeDataset {
    let mut d = ptr::null_mut();
    let st = unsafe { spe_dataset_checkerboard(0.1, n_min, n_maj, seed, &mut d) };
    assert_eq!(st, SpeStatus::Ok);
    d
}

fn matrix(d: *const SpeDataset) -> (Vec<f64>, Vec<u8>) {
    unsafe {
        let n = spe_dataset_n_rows(d);
        let mut x = vec![0.0; n * spe_dataset_n_features(d)];
        let mut y = vec![0u8; n];
        assert_eq!(spe_dataset_copy(d, x.as_mut_ptr(), y.as_mut_ptr()), SpeStatus::Ok);
        (x, y)
    }
}

fn scores(m: *const SpeModel, x: &[f64], n_features: usize) -> Vec<f64> {
    let n = x.len() / n_features;
    let mut s = vec![0.0; n];
    let st = unsafe { spe_predict(m, x.as_ptr(), n, n_features, s.as_mut_ptr()) };
    assert_eq!(st, SpeStatus::Ok, "{}", last_error());
    s
}

#[test]
fn train_predict_serialize_round_trip() {
    let train = checkerboard(200, 2000, 1);
    let test = checkerboard(200, 2000, 2);
    unsafe {
        assert_eq!(spe_dataset_n_rows(train), 2200);
        assert_eq!(spe_dataset_n_minority(train), 200);

        let config = spe_fit_config_default();
        assert_eq!((config.n_estimators, config.k_bins), (10, 20));
        let learner = spe_learner_config_default();
        let mut model = ptr::null_mut();
        assert_eq!(spe_fit(train, &config, &learner, &mut model), SpeStatus::Ok);
        assert_eq!(spe_model_n_members(model), 10);
        assert_eq!(spe_model_n_features(model), 2);

        let (x, y) = matrix(test);
        let s = scores(model, &x, 2);
        let mut ap = 0.0;
        assert_eq!(spe_aucprc(y.as_ptr(), s.as_ptr(), y.len(), &mut ap), SpeStatus::Ok);
        assert!(ap > 0.3, "aucprc {ap}");

        let mut json = ptr::null_mut();
        assert_eq!(spe_model_to_json(model, &mut json), SpeStatus::Ok);
        let mut restored = ptr::null_mut();
        assert_eq!(spe_model_from_json(json, &mut restored), SpeStatus::Ok);
        assert_eq!(scores(restored, &x, 2), s);

        let mut m = SpeMetrics::default();
        assert_eq!(spe_evaluate(y.as_ptr(), s.as_ptr(), y.len(), 0.5, &mut m), SpeStatus::Ok);
        assert_eq!(m.aucprc, ap);
        assert_eq!(m.threshold, 0.5);

        spe_string_free(json);
        spe_model_free(restored);
        spe_model_free(model);
        spe_dataset_free(train);
        spe_dataset_free(test);
    }
}

#[test]
fn same_seed_same_model() {
    let d = checkerboard(50, 500, 3);
    unsafe {
        let mut config = spe_fit_config_default();
        config.seed = 11;
        config.method = SpeMethod::Cascade;
        let learner = spe_learner_config_default();
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(spe_fit(d, &config, &learner, &mut a), SpeStatus::Ok);
        assert_eq!(spe_fit(d, &config, &learner, &mut b), SpeStatus::Ok);
        let (mut ja, mut jb) = (ptr::null_mut(), ptr::null_mut());
        spe_model_to_json(a, &mut ja);
        spe_model_to_json(b, &mut jb);
        assert_eq!(CStr::from_ptr(ja), CStr::from_ptr(jb));
        spe_string_free(ja);
        spe_string_free(jb);
        spe_model_free(a);
        spe_model_free(b);
        spe_dataset_free(d);
    }
}

#[test]
fn errors_have_codes_and_messages() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(spe_dataset_new(ptr::null(), 3, 2, ptr::null(), &mut d), SpeStatus::NullPointer);
        assert!(last_error().contains("features"));
        assert!(d.is_null());

        let x = [0.0, 1.0, 2.0];
        let y = [0u8, 2, 1];
        assert_eq!(spe_dataset_new(x.as_ptr(), 3, 1, y.as_ptr(), &mut d), SpeStatus::Label);

        let y = [0u8, 0, 1];
        assert_eq!(spe_dataset_new(x.as_ptr(), 3, 1, y.as_ptr(), &mut d), SpeStatus::Ok);
        assert_eq!(last_error(), "");

        let mut config = spe_fit_config_default();
        config.n_estimators = 0;
        let learner = spe_learner_config_default();
        let mut model = ptr::null_mut();
        assert_eq!(spe_fit(d, &config, &learner, &mut model), SpeStatus::Parameter);
        assert!(last_error().contains("n_estimators"));
        assert_eq!(spe_fit(d, ptr::null(), &learner, &mut model), SpeStatus::NullPointer);

        let config = spe_fit_config_default();
        assert_eq!(spe_fit(d, &config, &learner, &mut model), SpeStatus::Ok);
        let mut out = [0.0; 1];
        let row = [0.5, 0.5];
        assert_eq!(spe_predict(model, row.as_ptr(), 1, 2, out.as_mut_ptr()), SpeStatus::Dimension);
        assert!(last_error().contains("expected 1"));

        let mut bad = ptr::null_mut();
        let text = c"{\"format\":\"other\"}";
        assert_ne!(spe_model_from_json(text.as_ptr(), &mut bad), SpeStatus::Ok);
        assert!(bad.is_null());

        let mut ap = 0.0;
        let labels = [0u8, 1];
        let s = [0.2, f64::NAN];
        assert_ne!(spe_aucprc(labels.as_ptr(), s.as_ptr(), 2, &mut ap), SpeStatus::Ok);

        spe_model_free(model);
        spe_dataset_free(d);
        spe_dataset_free(ptr::null_mut());
        spe_model_free(ptr::null_mut());
    }
}

/// External learner: scores a row by how much closer it is to the positive
/// class mean than to the negative one.
struct Centroids {
    fits: AtomicUsize,
    frees: AtomicUsize,
    fail_fit: bool,
}

unsafe extern "C" fn centroid_fit(
    user: *mut c_void,
    features: *const f64,
    n_rows: usize,
    n_features: usize,
    labels: *const u8,
    _seed: u64,
    model_out: *mut *mut c_void,
) -> i32 {
    let state = &*(user as *const Centroids);
    if state.fail_fit {
        return 7;
    }
    state.fits.fetch_add(1, Ordering::SeqCst);
    let x = std::slice::from_raw_parts(features, n_rows * n_features);
    let y = std::slice::from_raw_parts(labels, n_rows);
    let mut means = vec![0.0; 2 * n_features];
    let mut counts = [0.0f64; 2];
    for (row, &label) in x.chunks(n_features).zip(y) {
        counts[label as usize] += 1.0;
        for (j, v) in row.iter().enumerate() {
            means[label as usize * n_features + j] += v;
        }
    }
    for c in 0..2 {
        for j in 0..n_features {
            means[c * n_features + j] /= counts[c].max(1.0);
        }
    }
    *model_out = Box::into_raw(Box::new(means)) as *mut c_void;
    0
}

unsafe extern "C" fn centroid_predict(
    _user: *mut c_void,
    model: *const c_void,
    row: *const f64,
    n_features: usize,
    proba_out: *mut f64,
) -> i32 {
    let means = &*(model as *const Vec<f64>);
    let x = std::slice::from_raw_parts(row, n_features);
    let dist = |c: usize| -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - means[c * n_features + j]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (d0, d1) = (dist(0), dist(1));
    *proba_out = if d0 + d1 == 0.0 { 0.5 } else { d0 / (d0 + d1) };
    0
}

unsafe extern "C" fn centroid_free(user: *mut c_void, model: *mut c_void) {
    let state = &*(user as *const Centroids);
    state.frees.fetch_add(1, Ordering::SeqCst);
    drop(Box::from_raw(model as *mut Vec<f64>));
}

fn centroid_table(state: &Centroids) -> SpeExternalLearner {
    SpeExternalLearner {
        user_data: state as *const Centroids as *mut c_void,
        fit: Some(centroid_fit),
        predict: Some(centroid_predict),
        free_model: Some(centroid_free),
    }
}

#[test]
fn external_learner_trains_and_releases_models() {
    let state = Centroids {
        fits: AtomicUsize::new(0),
        frees: AtomicUsize::new(0),
        fail_fit: false,
    };
    let table = centroid_table(&state);
    let d = checkerboard(100, 1000, 4);
    unsafe {
        let mut config = spe_fit_config_default();
        config.n_estimators = 5;
        let mut model = ptr::null_mut();
        assert_eq!(spe_fit_external(d, &config, &table, &mut model), SpeStatus::Ok, "{}", last_error());
        assert_eq!(spe_model_n_members(model), 5);
        // the bootstrap model is trained, scored and then dropped
        assert_eq!(state.fits.load(Ordering::SeqCst), 6);
        assert_eq!(state.frees.load(Ordering::SeqCst), 1);

        let (x, _) = matrix(d);
        let s = scores(model, &x, 2);
        assert!(s.iter().all(|p| (0.0..=1.0).contains(p)));

        let mut json = ptr::null_mut();
        assert_eq!(spe_model_to_json(model, &mut json), SpeStatus::InvalidModel);

        config.method = SpeMethod::Easy;
        let mut easy = ptr::null_mut();
        assert_eq!(spe_fit_external(d, &config, &table, &mut easy), SpeStatus::Ok);
        spe_model_free(easy);
        spe_model_free(model);
        spe_dataset_free(d);
    }
    assert_eq!(state.fits.load(Ordering::SeqCst), state.frees.load(Ordering::SeqCst));
}

#[test]
fn external_failures_are_reported() {
    let state = Centroids {
        fits: AtomicUsize::new(0),
        frees: AtomicUsize::new(0),
        fail_fit: true,
    };
    let mut table = centroid_table(&state);
    let d = checkerboard(20, 200, 5);
    unsafe {
        let config = spe_fit_config_default();
        let mut model = ptr::null_mut();
        assert_eq!(spe_fit_external(d, &config, &table, &mut model), SpeStatus::Callback);
        assert!(last_error().contains("returned 7"), "{}", last_error());
        assert!(model.is_null());

        table.predict = None;
        assert_eq!(spe_fit_external(d, &config, &table, &mut model), SpeStatus::NullPointer);
        spe_dataset_free(d);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spe.h")).unwrap();
    for name in [
        "spe_last_error",
        "spe_dataset_new",
        "spe_dataset_checkerboard",
        "spe_fit",
        "spe_fit_external",
        "spe_predict",
        "spe_model_to_json",
        "spe_model_from_json",
        "spe_model_free",
        "spe_aucprc",
        "SPE_STATUS_DIMENSION",
        "typedef struct SpeModel SpeModel",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C program against the static library when a C
/// compiler and the archive are both available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let archive = profile_dir.join("libspe_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !archive.exists() || std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no {} or no C compiler", archive.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "spe.h"
int main(void) {
    SpeDataset *d = NULL;
    if (spe_dataset_checkerboard(0.1, 50, 500, 1, &d) != SPE_STATUS_OK) return 1;
    SpeFitConfig cfg = spe_fit_config_default();
    SpeLearnerConfig lc = spe_learner_config_default();
    SpeModel *m = NULL;
    if (spe_fit(d, &cfg, &lc, &m) != SPE_STATUS_OK) { fprintf(stderr, "%s\n", spe_last_error()); return 2; }
    double row[2] = {1.0, 0.0}, p = -1.0;
    if (spe_predict(m, row, 1, 2, &p) != SPE_STATUS_OK) return 3;
    if (spe_predict(m, row, 1, 3, &p) != SPE_STATUS_DIMENSION) return 4;
    printf("%zu %.3f\n", spe_model_n_members(m), p);
    spe_model_free(m);
    spe_dataset_free(d);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = std::process::Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program failed: {:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("10 "), "{text}");
}
