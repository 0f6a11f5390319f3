//! C interface to arscope.
//!
//! Populations and models are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns an [`ArsStatus`]; on failure the message is available from
//! [`ars_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use arscope::dataset::{assemble_user_task, UserId};
use arscope::interchange::{load_population, save_population};
use arscope::mitigation::beta_noise;
use arscope::model_file::ModelFile;
use arscope::region::{estimate_acceptance_region, measure_region_volume, ThresholdGrid, VolumeMode};
use arscope::synth::{generate_population, PopulationSpec};
use arscope::{train, Algorithm, Error, Population, ScoringModel, TrainConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    TrainingDiverged = 3,
    Parse = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArsAlgorithm {
    Perceptron = 0,
    LinearSvm = 1,
    RbfSvm = 2,
    RandomForest = 3,
    Mlp = 4,
    Cosine = 5,
}

impl From<ArsAlgorithm> for Algorithm {
    fn from(a: ArsAlgorithm) -> Self {
        match a {
            ArsAlgorithm::Perceptron => Algorithm::Perceptron,
            ArsAlgorithm::LinearSvm => Algorithm::LinearSvm,
            ArsAlgorithm::RbfSvm => Algorithm::RbfSvm,
            ArsAlgorithm::RandomForest => Algorithm::RandomForest,
            ArsAlgorithm::Mlp => Algorithm::Mlp,
            ArsAlgorithm::Cosine => Algorithm::Cosine,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArsVolumeMode {
    Binned = 0,
    Span = 1,
}

/// Opaque population handle.
pub struct ArsPopulation(Population);

/// Opaque model handle.
pub struct ArsModel(ModelFile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> ArsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            ArsStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            let status = match e {
                Error::InvalidInput(_) => ArsStatus::InvalidInput,
                Error::TrainingDiverged(_) => ArsStatus::TrainingDiverged,
                Error::Parse(_) => ArsStatus::Parse,
                Error::Io(_) => ArsStatus::Io,
            };
            set_error(e.to_string());
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            ArsStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidInput("path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ars_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ars_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Synthetic population with the default moments and the given shape.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ars_population_generate(
    users: usize,
    features: usize,
    samples_per_user: usize,
    seed: u64,
    out: *mut *mut ArsPopulation,
) -> ArsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let spec = PopulationSpec {
            user_count: users,
            feature_count: features,
            samples_per_user,
            ..PopulationSpec::default()
        };
        *out = boxed(ArsPopulation(generate_population(&spec, seed)?));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ars_population_load_csv(
    path: *const c_char,
    out: *mut *mut ArsPopulation,
) -> ArsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = boxed(ArsPopulation(load_population(&path_arg(path)?)?));
        Ok(())
    })
}

/// # Safety
/// `pop` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ars_population_save_csv(
    pop: *const ArsPopulation,
    path: *const c_char,
) -> ArsStatus {
    guard(|| {
        let pop = as_ref(pop, "population")?;
        save_population(&path_arg(path)?, &pop.0)?;
        Ok(())
    })
}

/// Min-max normalizes the population in place.
///
/// # Safety
/// `pop` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ars_population_normalize(pop: *mut ArsPopulation) -> ArsStatus {
    guard(|| {
        let pop = out_ref(pop, "population")?;
        pop.0 = pop.0.normalize()?.0;
        Ok(())
    })
}

/// # Safety
/// `pop` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ars_population_user_count(pop: *const ArsPopulation) -> usize {
    pop.as_ref().map_or(0, |p| p.0.user_count())
}

/// # Safety
/// `pop` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ars_population_feature_count(pop: *const ArsPopulation) -> usize {
    pop.as_ref().map_or(0, |p| p.0.feature_count())
}

/// # Safety
/// `pop` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ars_population_free(pop: *mut ArsPopulation) {
    if !pop.is_null() {
        drop(Box::from_raw(pop));
    }
}

/// Trains `user` against a balanced sample of the other users, on the
/// train partition of a `train_fraction` split. Default hyperparameters.
///
/// # Safety
/// `pop` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ars_model_train(
    pop: *const ArsPopulation,
    user: u32,
    algorithm: ArsAlgorithm,
    train_fraction: f64,
    seed: u64,
    out: *mut *mut ArsModel,
) -> ArsStatus {
    guard(|| {
        let pop = as_ref(pop, "population")?;
        let out = out_ref(out, "out")?;
        let task = assemble_user_task(&pop.0, UserId(user), train_fraction, seed)?;
        let config = TrainConfig::default().with_seed(seed);
        let model = train(algorithm.into(), &task.train, &config)?;
        *out = boxed(ArsModel(ModelFile::new(model, None)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ars_model_load(path: *const c_char, out: *mut *mut ArsModel) -> ArsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = boxed(ArsModel(ModelFile::load(&path_arg(path)?)?));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ars_model_save(model: *const ArsModel, path: *const c_char) -> ArsStatus {
    guard(|| {
        let model = as_ref(model, "model")?;
        model.0.save(&path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ars_model_feature_count(model: *const ArsModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.model.feature_count())
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ars_model_free(model: *mut ArsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn scoring(model: &ArsModel) -> &ScoringModel {
    &model.0.model
}

/// Score in `[0, 1]` of one feature vector in normalized space.
///
/// # Safety
/// `x` must point to `len` doubles and `score` be writable.
#[no_mangle]
pub unsafe extern "C" fn ars_model_score(
    model: *const ArsModel,
    x: *const f64,
    len: usize,
    score: *mut f64,
) -> ArsStatus {
    guard(|| {
        let model = as_ref(model, "model")?;
        let x = slice_arg(x, len, "x")?;
        let score = out_ref(score, "score")?;
        *score = scoring(model).score(x)?;
        Ok(())
    })
}

/// Monte Carlo acceptance fraction at one threshold.
///
/// # Safety
/// `model` must be a live handle; `ar` and `std_error` writable.
#[no_mangle]
pub unsafe extern "C" fn ars_estimate_ar(
    model: *const ArsModel,
    samples: u64,
    seed: u64,
    threshold: f64,
    ar: *mut f64,
    std_error: *mut f64,
) -> ArsStatus {
    guard(|| {
        let model = as_ref(model, "model")?;
        let ar = out_ref(ar, "ar")?;
        let std_error = out_ref(std_error, "std_error")?;
        let grid = ThresholdGrid::new(vec![threshold])?;
        let est = estimate_acceptance_region(scoring(model), samples, seed, &grid)?;
        *ar = est[0].accept_fraction;
        *std_error = est[0].std_error;
        Ok(())
    })
}

/// Writes `count` beta-noise vectors row-major into `out`, which must hold
/// `count * features` doubles.
///
/// # Safety
/// `means` must point to `features` doubles and `out` to `count * features`.
#[no_mangle]
pub unsafe extern "C" fn ars_beta_noise(
    means: *const f64,
    features: usize,
    count: usize,
    seed: u64,
    out: *mut f64,
) -> ArsStatus {
    guard(|| {
        let means = slice_arg(means, features, "means")?;
        let total = count
            .checked_mul(features)
            .ok_or_else(|| Error::InvalidInput("output size overflows".into()))?;
        let rows = beta_noise(means, count, seed)?;
        if total == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let out = slice::from_raw_parts_mut(out, total);
        for (dst, row) in out.chunks_mut(features).zip(&rows) {
            dst.copy_from_slice(row.as_slice());
        }
        Ok(())
    })
}

/// log10 volume of the bins filled by `rows` row-major samples.
///
/// # Safety
/// `samples` must point to `rows * features` doubles; `log10_volume` writable.
#[no_mangle]
pub unsafe extern "C" fn ars_region_volume(
    samples: *const f64,
    rows: usize,
    features: usize,
    bins: usize,
    cutoff: usize,
    mode: ArsVolumeMode,
    log10_volume: *mut f64,
) -> ArsStatus {
    guard(|| {
        let out = out_ref(log10_volume, "log10_volume")?;
        if features == 0 {
            return Err(Error::InvalidInput("feature count must be positive".into()).into());
        }
        let total = rows
            .checked_mul(features)
            .ok_or_else(|| Error::InvalidInput("input size overflows".into()))?;
        let data = slice_arg(samples, total, "samples")?;
        let chunks: Vec<&[f64]> = data.chunks(features).collect();
        let mode = match mode {
            ArsVolumeMode::Binned => VolumeMode::Binned,
            ArsVolumeMode::Span => VolumeMode::Span,
        };
        *out = measure_region_volume(&chunks, bins, cutoff, mode)?.log10_volume;
        Ok(())
    })
}
