use std::ffi::{CStr, CString};
use std::ptr;

use arscope_ffi::*;

fn last_error() -> String {
    let p = ars_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn population(seed: u64) -> *mut ArsPopulation {
    let mut pop = ptr::null_mut();
    let status = unsafe { ars_population_generate(6, 5, 40, seed, &mut pop) };
    assert_eq!(status, ArsStatus::Ok);
    assert_eq!(unsafe { ars_population_normalize(pop) }, ArsStatus::Ok);
    pop
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(ars_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn train_score_and_measure() {
    let pop = population(4);
    assert_eq!(unsafe { ars_population_user_count(pop) }, 6);
    let mut model = ptr::null_mut();
    let status = unsafe { ars_model_train(pop, 2, ArsAlgorithm::LinearSvm, 0.7, 9, &mut model) };
    assert_eq!(status, ArsStatus::Ok);
    assert_eq!(unsafe { ars_model_feature_count(model) }, 5);

    let x = [0.5; 5];
    let mut score = -1.0;
    assert_eq!(unsafe { ars_model_score(model, x.as_ptr(), 5, &mut score) }, ArsStatus::Ok);
    assert!((0.0..=1.0).contains(&score));

    let (mut ar, mut se) = (0.0, 0.0);
    assert_eq!(unsafe { ars_estimate_ar(model, 20_000, 1, 0.5, &mut ar, &mut se) }, ArsStatus::Ok);
    assert!((0.0..=1.0).contains(&ar) && se >= 0.0);
    let (mut again, mut _se) = (0.0, 0.0);
    unsafe { ars_estimate_ar(model, 20_000, 1, 0.5, &mut again, &mut _se) };
    assert_eq!(ar, again);

    unsafe {
        ars_model_free(model);
        ars_population_free(pop);
    }
}

#[test]
fn wrong_dimension_sets_error() {
    let pop = population(5);
    let mut model = ptr::null_mut();
    unsafe { ars_model_train(pop, 0, ArsAlgorithm::Cosine, 0.7, 1, &mut model) };
    let x = [0.5; 3];
    let mut score = 0.0;
    let status = unsafe { ars_model_score(model, x.as_ptr(), 3, &mut score) };
    assert_eq!(status, ArsStatus::InvalidInput);
    assert!(last_error().contains("feature"), "{}", last_error());
    unsafe {
        ars_model_free(model);
        ars_population_free(pop);
    }
}

#[test]
fn null_arguments_are_reported() {
    let status = unsafe { ars_population_generate(5, 5, 10, 1, ptr::null_mut()) };
    assert_eq!(status, ArsStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
    let mut score = 0.0;
    let x = [0.0];
    assert_eq!(
        unsafe { ars_model_score(ptr::null(), x.as_ptr(), 1, &mut score) },
        ArsStatus::NullPointer
    );
    unsafe {
        ars_model_free(ptr::null_mut());
        ars_population_free(ptr::null_mut());
    }
}

#[test]
fn model_and_population_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pop = population(6);
    let csv = CString::new(dir.path().join("pop.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ars_population_save_csv(pop, csv.as_ptr()) }, ArsStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { ars_population_load_csv(csv.as_ptr(), &mut loaded) }, ArsStatus::Ok);
    assert_eq!(unsafe { ars_population_feature_count(loaded) }, 5);

    let mut model = ptr::null_mut();
    unsafe { ars_model_train(loaded, 1, ArsAlgorithm::RbfSvm, 0.7, 2, &mut model) };
    let json = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ars_model_save(model, json.as_ptr()) }, ArsStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { ars_model_load(json.as_ptr(), &mut back) }, ArsStatus::Ok);
    let x = [0.3, 0.7, 0.2, 0.9, 0.5];
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        ars_model_score(model, x.as_ptr(), 5, &mut a);
        ars_model_score(back, x.as_ptr(), 5, &mut b);
    }
    assert_eq!(a, b);

    let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { ars_model_load(missing.as_ptr(), &mut none) }, ArsStatus::Io);
    unsafe {
        ars_model_free(model);
        ars_model_free(back);
        ars_population_free(pop);
        ars_population_free(loaded);
    }
}

#[test]
fn beta_noise_fills_buffer() {
    let means = [0.2, 0.8, 0.5];
    let mut out = vec![f64::NAN; 3 * 100];
    let status = unsafe { ars_beta_noise(means.as_ptr(), 3, 100, 7, out.as_mut_ptr()) };
    assert_eq!(status, ArsStatus::Ok);
    assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    let bad = [1.5];
    let mut one = [0.0];
    assert_eq!(
        unsafe { ars_beta_noise(bad.as_ptr(), 1, 1, 7, one.as_mut_ptr()) },
        ArsStatus::InvalidInput
    );
}

#[test]
fn region_volume_of_known_samples() {
    let samples = [0.05, 0.15, 0.25];
    let mut v = 0.0;
    let status = unsafe {
        ars_region_volume(samples.as_ptr(), 3, 1, 10, 0, ArsVolumeMode::Binned, &mut v)
    };
    assert_eq!(status, ArsStatus::Ok);
    assert_eq!(v, 0.3f64.log10());
}
