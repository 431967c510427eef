//! C interface to `spe-core`.
//!
//! Every function returns an [`SpeStatus`]; on failure a description is
//! available from [`spe_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles ([`SpeDataset`], [`SpeModel`]) that the caller
//! releases with the matching `*_free` function. Feature matrices are dense,
//! row-major `double` arrays; labels are `uint8_t` 0/1.
//!
//! Training may call an [`SpeExternalLearner`]'s callbacks from several
//! threads at once, so they must be thread-safe.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rand::RngCore;
use spe_core::data::CheckerboardSpec;
use spe_core::ensemble::{fit_method, Method, MethodConfig};
use spe_core::metrics::{aucprc, evaluate};
use spe_core::{
    AdaBoostParams, BaseLearner, BaseModel, Dataset, DecisionTreeParams, EnsembleModel, HardnessFunction,
    Learner, ProbabilisticClassifier, RandomSource, SpeError,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidModel = 3,
    Dimension = 4,
    Range = 5,
    Parameter = 6,
    Parse = 7,
    Label = 8,
    Io = 9,
    Serialization = 10,
    Callback = 11,
    Panic = 12,
}

impl From<&SpeError> for SpeStatus {
    fn from(e: &SpeError) -> Self {
        match e {
            SpeError::InvalidInput(_) => SpeStatus::InvalidInput,
            SpeError::InvalidModel(_) => SpeStatus::InvalidModel,
            SpeError::Dimension { .. } => SpeStatus::Dimension,
            SpeError::Range(_) => SpeStatus::Range,
            SpeError::Parameter { .. } => SpeStatus::Parameter,
            SpeError::Parse { .. } => SpeStatus::Parse,
            SpeError::Label(_) => SpeStatus::Label,
            SpeError::Io { .. } => SpeStatus::Io,
            SpeError::Csv(_) | SpeError::Json(_) => SpeStatus::Serialization,
            SpeError::Training { source, .. } => SpeStatus::from(source.as_ref()),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeMethod {
    Spe = 0,
    Easy = 1,
    Cascade = 2,
    RandUnder = 3,
    RandOver = 4,
    None = 5,
}

impl From<SpeMethod> for Method {
    fn from(m: SpeMethod) -> Self {
        match m {
            SpeMethod::Spe => Method::Spe,
            SpeMethod::Easy => Method::Easy,
            SpeMethod::Cascade => Method::Cascade,
            SpeMethod::RandUnder => Method::RandUnder,
            SpeMethod::RandOver => Method::RandOver,
            SpeMethod::None => Method::None,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeHardness {
    Absolute = 0,
    Squared = 1,
    CrossEntropy = 2,
}

impl From<SpeHardness> for HardnessFunction {
    fn from(h: SpeHardness) -> Self {
        match h {
            SpeHardness::Absolute => HardnessFunction::AbsoluteError,
            SpeHardness::Squared => HardnessFunction::SquaredError,
            SpeHardness::CrossEntropy => HardnessFunction::CrossEntropy,
        }
    }
}

/// Training settings. Obtain defaults from [`spe_fit_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpeFitConfig {
    pub method: SpeMethod,
    pub n_estimators: usize,
    pub k_bins: usize,
    pub hardness: SpeHardness,
    pub alpha_cap: f64,
    /// Cascade keep rate in (0, 1]; zero or negative selects the default.
    pub keep_fp_rate: f64,
    pub seed: u64,
}

impl From<&SpeFitConfig> for MethodConfig {
    fn from(c: &SpeFitConfig) -> Self {
        MethodConfig {
            method: c.method.into(),
            n_estimators: c.n_estimators,
            k_bins: c.k_bins,
            hardness: c.hardness.into(),
            alpha_cap: c.alpha_cap,
            keep_fp_rate: (c.keep_fp_rate > 0.0).then_some(c.keep_fp_rate),
            seed: c.seed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeLearnerKind {
    Tree = 0,
    AdaBoost = 1,
}

/// Built-in learner settings. Obtain defaults from [`spe_learner_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpeLearnerConfig {
    pub kind: SpeLearnerKind,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_impurity_decrease: f64,
    pub ada_estimators: usize,
    pub weak_depth: usize,
    pub learning_rate: f64,
}

impl From<&SpeLearnerConfig> for BaseLearner {
    fn from(c: &SpeLearnerConfig) -> Self {
        match c.kind {
            SpeLearnerKind::Tree => BaseLearner::Tree(DecisionTreeParams {
                max_depth: c.max_depth,
                min_samples_split: c.min_samples_split,
                min_impurity_decrease: c.min_impurity_decrease,
            }),
            SpeLearnerKind::AdaBoost => BaseLearner::AdaBoost(AdaBoostParams {
                n_estimators: c.ada_estimators,
                weak_learner_depth: c.weak_depth,
                learning_rate: c.learning_rate,
            }),
        }
    }
}

/// Threshold metrics and AUCPRC of one scored sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpeMetrics {
    pub aucprc: f64,
    pub f1: f64,
    pub gmean: f64,
    pub mcc: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

/// Caller-supplied classifier.
///
/// `fit` trains on a row-major matrix and stores an opaque model in
/// `*model_out`; `predict` writes `P(y = 1 | row)` to `*proba_out`;
/// `free_model` releases a model. Nonzero returns signal failure.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct SpeExternalLearner {
    pub user_data: *mut c_void,
    pub fit: Option<
        unsafe extern "C" fn(
            user_data: *mut c_void,
            features: *const f64,
            n_rows: usize,
            n_features: usize,
            labels: *const u8,
            seed: u64,
            model_out: *mut *mut c_void,
        ) -> i32,
    >,
    pub predict: Option<
        unsafe extern "C" fn(
            user_data: *mut c_void,
            model: *const c_void,
            row: *const f64,
            n_features: usize,
            proba_out: *mut f64,
        ) -> i32,
    >,
    pub free_model: Option<unsafe extern "C" fn(user_data: *mut c_void, model: *mut c_void)>,
}

// The caller promises thread-safe callbacks (see the module docs).
unsafe impl Send for SpeExternalLearner {}
unsafe impl Sync for SpeExternalLearner {}

struct ExternalModel {
    learner: Arc<SpeExternalLearner>,
    handle: *mut c_void,
    n_features: usize,
}

unsafe impl Send for ExternalModel {}
unsafe impl Sync for ExternalModel {}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Some(free) = self.learner.free_model {
            unsafe { free(self.learner.user_data, self.handle) };
        }
    }
}

impl ProbabilisticClassifier for ExternalModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> spe_core::Result<f64> {
        if x.len() != self.n_features {
            return Err(SpeError::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let predict = self.learner.predict.expect("checked when the learner was accepted");
        let mut p = f64::NAN;
        let rc = unsafe { predict(self.learner.user_data, self.handle, x.as_ptr(), x.len(), &mut p) };
        if rc != 0 {
            return Err(SpeError::InvalidModel(format!("external predict returned {rc}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(SpeError::Range(format!("external predict returned probability {p}")));
        }
        Ok(p)
    }
}

struct ExternalLearner(Arc<SpeExternalLearner>);

impl Learner for ExternalLearner {
    type Model = ExternalModel;

    fn fit(&self, data: &Dataset, rng: &mut RandomSource) -> spe_core::Result<ExternalModel> {
        let fit = self.0.fit.expect("checked when the learner was accepted");
        let mut handle = ptr::null_mut();
        let rc = unsafe {
            fit(
                self.0.user_data,
                data.features().as_ptr(),
                data.n_rows(),
                data.n_features(),
                data.labels().as_ptr(),
                rng.next_u64(),
                &mut handle,
            )
        };
        if rc != 0 {
            return Err(SpeError::InvalidInput(format!("external fit returned {rc}")));
        }
        Ok(ExternalModel {
            learner: Arc::clone(&self.0),
            handle,
            n_features: data.n_features(),
        })
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "external" })
    }
}

/// Opaque labelled dataset.
pub struct SpeDataset(Dataset);

enum ModelInner {
    Builtin(EnsembleModel<BaseModel>),
    External(EnsembleModel<ExternalModel>),
}

/// Opaque trained ensemble.
pub struct SpeModel(ModelInner);

impl SpeModel {
    fn scorer(&self) -> &dyn ProbabilisticClassifier {
        match &self.0 {
            ModelInner::Builtin(m) => m,
            ModelInner::External(m) => m,
        }
    }

    fn len(&self) -> usize {
        match &self.0 {
            ModelInner::Builtin(m) => m.len(),
            ModelInner::External(m) => m.len(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(SpeStatus, String);

impl From<SpeError> for Failure {
    fn from(e: SpeError) -> Self {
        Failure(SpeStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SpeStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SpeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            SpeStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {message}"));
            SpeStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

fn product(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure(SpeStatus::InvalidInput, "matrix size overflows".into()))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn spe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies a row-major `n_rows × n_features` matrix and its labels.
#[no_mangle]
pub unsafe extern "C" fn spe_dataset_new(
    features: *const f64,
    n_rows: usize,
    n_features: usize,
    labels: *const u8,
    dataset_out: *mut *mut SpeDataset,
) -> SpeStatus {
    guard(|| {
        let slot = out(dataset_out, "dataset_out")?;
        let x = slice(features, product(n_rows, n_features)?, "features")?;
        let y = slice(labels, n_rows, "labels")?;
        let data = Dataset::new(x.to_vec(), n_features, y.to_vec())?;
        *slot = Box::into_raw(Box::new(SpeDataset(data)));
        Ok(())
    })
}

/// Generates a 4×4 checkerboard of Gaussians.
#[no_mangle]
pub unsafe extern "C" fn spe_dataset_checkerboard(
    cov_scale: f64,
    n_minority: usize,
    n_majority: usize,
    seed: u64,
    dataset_out: *mut *mut SpeDataset,
) -> SpeStatus {
    guard(|| {
        let slot = out(dataset_out, "dataset_out")?;
        let spec = CheckerboardSpec {
            cov_scale,
            n_minority,
            n_majority,
            seed,
        };
        *slot = Box::into_raw(Box::new(SpeDataset(spec.generate()?)));
        Ok(())
    })
}

/// Loads a CSV with a header row; the last column is the label and `1` the
/// positive value.
#[no_mangle]
pub unsafe extern "C" fn spe_dataset_load_csv(path: *const c_char, dataset_out: *mut *mut SpeDataset) -> SpeStatus {
    guard(|| {
        let slot = out(dataset_out, "dataset_out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(SpeStatus::InvalidInput, "path is not UTF-8".into()))?;
        let loaded = spe_core::data::load_csv(path, &Default::default())?;
        *slot = Box::into_raw(Box::new(SpeDataset(loaded.dataset)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spe_dataset_n_rows(dataset: *const SpeDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n_rows())
}

#[no_mangle]
pub unsafe extern "C" fn spe_dataset_n_features(dataset: *const SpeDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n_features())
}

#[no_mangle]
pub unsafe extern "C" fn spe_dataset_n_minority(dataset: *const SpeDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n_minority())
}

/// Copies the feature matrix (`n_rows × n_features` doubles) and the labels
/// (`n_rows` bytes); either destination may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn spe_dataset_copy(
    dataset: *const SpeDataset,
    features_out: *mut f64,
    labels_out: *mut u8,
) -> SpeStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        if !features_out.is_null() {
            ptr::copy_nonoverlapping(d.features().as_ptr(), features_out, d.features().len());
        }
        if !labels_out.is_null() {
            ptr::copy_nonoverlapping(d.labels().as_ptr(), labels_out, d.n_rows());
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spe_dataset_free(dataset: *mut SpeDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub extern "C" fn spe_fit_config_default() -> SpeFitConfig {
    let c = MethodConfig::default();
    SpeFitConfig {
        method: SpeMethod::Spe,
        n_estimators: c.n_estimators,
        k_bins: c.k_bins,
        hardness: SpeHardness::Absolute,
        alpha_cap: c.alpha_cap,
        keep_fp_rate: 0.0,
        seed: c.seed,
    }
}

#[no_mangle]
pub extern "C" fn spe_learner_config_default() -> SpeLearnerConfig {
    let tree = DecisionTreeParams::default();
    let ada = AdaBoostParams::default();
    SpeLearnerConfig {
        kind: SpeLearnerKind::Tree,
        max_depth: tree.max_depth,
        min_samples_split: tree.min_samples_split,
        min_impurity_decrease: tree.min_impurity_decrease,
        ada_estimators: ada.n_estimators,
        weak_depth: ada.weak_learner_depth,
        learning_rate: ada.learning_rate,
    }
}

/// Trains an ensemble of built-in learners.
#[no_mangle]
pub unsafe extern "C" fn spe_fit(
    dataset: *const SpeDataset,
    config: *const SpeFitConfig,
    learner: *const SpeLearnerConfig,
    model_out: *mut *mut SpeModel,
) -> SpeStatus {
    guard(|| {
        let slot = out(model_out, "model_out")?;
        let data = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        let config = MethodConfig::from(config.as_ref().ok_or_else(|| null("config"))?);
        let learner = BaseLearner::from(learner.as_ref().ok_or_else(|| null("learner"))?);
        learner.validate()?;
        let trained = fit_method(data, &config, &learner)?;
        *slot = Box::into_raw(Box::new(SpeModel(ModelInner::Builtin(trained.model))));
        Ok(())
    })
}

/// Trains an ensemble of caller-supplied classifiers. The callback table is
/// copied; `user_data` must outlive the returned model.
#[no_mangle]
pub unsafe extern "C" fn spe_fit_external(
    dataset: *const SpeDataset,
    config: *const SpeFitConfig,
    learner: *const SpeExternalLearner,
    model_out: *mut *mut SpeModel,
) -> SpeStatus {
    guard(|| {
        let slot = out(model_out, "model_out")?;
        let data = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        let config = MethodConfig::from(config.as_ref().ok_or_else(|| null("config"))?);
        let table = *learner.as_ref().ok_or_else(|| null("learner"))?;
        if table.fit.is_none() || table.predict.is_none() {
            return Err(Failure(
                SpeStatus::NullPointer,
                "external learner needs `fit` and `predict` callbacks".into(),
            ));
        }
        let trained = fit_method(data, &config, &ExternalLearner(Arc::new(table))).map_err(|e| {
            let status = match &e {
                SpeError::Training { source, .. } if matches!(**source, SpeError::InvalidInput(ref m) if m.starts_with("external")) => {
                    SpeStatus::Callback
                }
                _ => SpeStatus::from(&e),
            };
            Failure(status, e.to_string())
        })?;
        *slot = Box::into_raw(Box::new(SpeModel(ModelInner::External(trained.model))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spe_model_n_members(model: *const SpeModel) -> usize {
    model.as_ref().map_or(0, SpeModel::len)
}

#[no_mangle]
pub unsafe extern "C" fn spe_model_n_features(model: *const SpeModel) -> usize {
    model.as_ref().map_or(0, |m| m.scorer().n_features())
}

/// Scores `n_rows` rows of a row-major matrix into `scores_out`.
#[no_mangle]
pub unsafe extern "C" fn spe_predict(
    model: *const SpeModel,
    features: *const f64,
    n_rows: usize,
    n_features: usize,
    scores_out: *mut f64,
) -> SpeStatus {
    guard(|| {
        let scorer = model.as_ref().ok_or_else(|| null("model"))?.scorer();
        if n_features != scorer.n_features() {
            return Err(SpeError::Dimension {
                expected: scorer.n_features(),
                got: n_features,
            }
            .into());
        }
        let x = slice(features, product(n_rows, n_features)?, "features")?;
        if n_rows > 0 && scores_out.is_null() {
            return Err(null("scores_out"));
        }
        for (i, row) in x.chunks_exact(n_features.max(1)).take(n_rows).enumerate() {
            *scores_out.add(i) = scorer.predict_proba(row)?;
        }
        Ok(())
    })
}

/// Serializes a built-in model to JSON. Release the string with
/// [`spe_string_free`].
#[no_mangle]
pub unsafe extern "C" fn spe_model_to_json(model: *const SpeModel, json_out: *mut *mut c_char) -> SpeStatus {
    guard(|| {
        let slot = out(json_out, "json_out")?;
        let text = match &model.as_ref().ok_or_else(|| null("model"))?.0 {
            ModelInner::Builtin(m) => m.to_json()?,
            ModelInner::External(_) => {
                return Err(SpeError::InvalidModel("external models cannot be serialized".into()).into())
            }
        };
        *slot = CString::new(text)
            .map_err(|_| Failure(SpeStatus::Serialization, "JSON contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spe_model_from_json(json: *const c_char, model_out: *mut *mut SpeModel) -> SpeStatus {
    guard(|| {
        let slot = out(model_out, "model_out")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure(SpeStatus::InvalidInput, "JSON is not UTF-8".into()))?;
        let model = EnsembleModel::<BaseModel>::from_json(text)?;
        for m in model.members() {
            m.validate()?;
        }
        *slot = Box::into_raw(Box::new(SpeModel(ModelInner::Builtin(model))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spe_model_free(model: *mut SpeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn spe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn spe_aucprc(labels: *const u8, scores: *const f64, n: usize, aucprc_out: *mut f64) -> SpeStatus {
    guard(|| {
        let slot = out(aucprc_out, "aucprc_out")?;
        *slot = aucprc(slice(labels, n, "labels")?, slice(scores, n, "scores")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spe_evaluate(
    labels: *const u8,
    scores: *const f64,
    n: usize,
    threshold: f64,
    metrics_out: *mut SpeMetrics,
) -> SpeStatus {
    guard(|| {
        let slot = out(metrics_out, "metrics_out")?;
        let r = evaluate(slice(labels, n, "labels")?, slice(scores, n, "scores")?, threshold)?;
        *slot = SpeMetrics {
            aucprc: r.aucprc,
            f1: r.f1,
            gmean: r.gmean,
            mcc: r.mcc,
            precision: r.precision,
            recall: r.recall,
            threshold: r.threshold,
        };
        Ok(())
    })
}
