//! The classifier suite: multinomial logistic regression, Gaussian naive
//! Bayes, CART decision tree, kNN, one-vs-rest linear SVM, SMO-trained kernel
//! SVMs in C and nu parameterizations, and a configurable feedforward
//! network.
//!
//! `fit` consumes a fully observed, labelled training set and returns an
//! immutable `TrainedModel`; `predict` is a pure function of the model and
//! input. Everything is deterministic given the spec seed.

mod knn;
mod linear_svm;
mod logistic;
pub mod mlp;
mod naive_bayes;
mod tree;

pub mod svm;

pub use mlp::{mlp_gradient_check, Activation, Network, NetworkArchitecture, OptimizerKind};
pub use svm::SvmDualAudit;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ClassLabel, DataMatrix, LabeledDataset};
use crate::preprocess::ScalerParams;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data contains a single class; need at least 2")]
    SingleClassTraining,
    #[error("feature count mismatch: model expects {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("prediction input must be fully observed")]
    IncompleteData,
    #[error("invalid classifier spec: {0}")]
    InvalidSpec(String),
    #[error("nu = {nu} is infeasible for class sizes {n_pos}/{n_neg}")]
    InfeasibleNu { nu: f64, n_pos: usize, n_neg: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("model file i/o error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file parse error: {0}")]
    Format(String),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Logistic,
    GaussianNb,
    DecisionTree,
    Knn,
    LinearSvm,
    KernelSvmC,
    KernelSvmNu,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 8] = [
        ClassifierKind::Logistic,
        ClassifierKind::GaussianNb,
        ClassifierKind::DecisionTree,
        ClassifierKind::Knn,
        ClassifierKind::LinearSvm,
        ClassifierKind::KernelSvmC,
        ClassifierKind::KernelSvmNu,
        ClassifierKind::Mlp,
    ];

    /// Display name used in comparison reports.
    pub fn report_name(&self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "LogisticRegression",
            ClassifierKind::GaussianNb => "GaussianNB",
            ClassifierKind::DecisionTree => "DecisionTree",
            ClassifierKind::Knn => "KNeighbors",
            ClassifierKind::LinearSvm => "LinearSVM",
            ClassifierKind::KernelSvmC => "SVM-C",
            ClassifierKind::KernelSvmNu => "SVM-Nu",
            ClassifierKind::Mlp => "MLP",
        }
    }
}

/// Classifier configuration. Fields are kind-specific; irrelevant ones are
/// ignored by the other kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// Report label; defaults to the kind's name. Lets two specs of the same
    /// kind (say a one-hidden-layer MLP and a deep tuned network) share a
    /// comparison table.
    pub name: Option<String>,
    pub seed: u64,
    /// kNN neighbour count.
    pub k: usize,
    /// Decision-tree depth and leaf-size limits.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 regularization for logistic regression.
    pub l2: f64,
    /// Soft-margin parameter for C-parameterized SVMs.
    pub c: f64,
    /// Margin-error/support-vector bound for nu-parameterized SVMs.
    pub nu: f64,
    /// RBF width; `None` = 1 / (n_features * total variance).
    pub gamma: Option<f64>,
    /// Network settings (MLP).
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    pub batch_norm: bool,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::Logistic,
            name: None,
            seed: 0,
            k: 5,
            max_depth: 10,
            min_samples_leaf: 2,
            l2: 1e-4,
            c: 1.0,
            nu: 0.5,
            gamma: None,
            hidden_layers: vec![100],
            activation: Activation::Relu,
            dropout: 0.0,
            batch_norm: false,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            epochs: 60,
            batch_size: 32,
        }
    }
}

impl ClassifierSpec {
    pub fn of_kind(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            kind,
            ..ClassifierSpec::default()
        }
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.kind.report_name().to_string())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        if self.k == 0 {
            return err("k must be >= 1");
        }
        if self.max_depth == 0 {
            return err("max_depth must be >= 1");
        }
        if self.min_samples_leaf == 0 {
            return err("min_samples_leaf must be >= 1");
        }
        if !(self.c > 0.0) {
            return err("C must be > 0");
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return err("nu must lie in (0, 1)");
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return err("gamma must be > 0");
            }
        }
        if !(self.l2 >= 0.0) {
            return err("l2 must be >= 0");
        }
        if !(self.learning_rate > 0.0) {
            return err("learning_rate must be > 0");
        }
        if self.epochs == 0 {
            return err("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return err("batch_size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err("dropout must lie in [0, 1)");
        }
        if self.hidden_layers.iter().any(|&s| s == 0) {
            return err("hidden layer sizes must be >= 1");
        }
        Ok(())
    }
}

/// Per-epoch accuracy curves recorded while training the network.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_accuracy: Vec<f64>,
    pub test_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModelParams {
    Logistic(logistic::LogisticParams),
    GaussianNb(naive_bayes::NbParams),
    Tree(tree::TreeParams),
    Knn(knn::KnnParams),
    LinearSvm(linear_svm::LinearSvmParams),
    KernelSvm(svm::KernelSvmParams),
    Mlp(Network),
}

/// An immutable fitted classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    /// Classes present in the training data, alphabet order; predictions are
    /// drawn from this alphabet.
    pub classes: Vec<ClassLabel>,
    pub n_features: usize,
    pub params: ModelParams,
    pub history: Option<TrainingHistory>,
    /// Non-fatal conditions hit during fitting (e.g. non-convergence).
    pub warnings: Vec<String>,
}

/// Fit a classifier on a fully observed, scaled training set.
pub fn fit(spec: &ClassifierSpec, train: &LabeledDataset) -> Result<TrainedModel, ModelError> {
    fit_with_eval(spec, train, None)
}

/// Like [`fit`], additionally recording per-epoch test accuracy for the
/// network kinds when an evaluation set is supplied.
pub fn fit_with_eval(
    spec: &ClassifierSpec,
    train: &LabeledDataset,
    eval: Option<&LabeledDataset>,
) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    if train.n_rows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let classes = train.classes_present();
    if classes.len() < 2 {
        return Err(ModelError::SingleClassTraining);
    }
    // Class indices in 0..classes.len()
    let y: Vec<usize> = train
        .labels()
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let x = train.features().values();

    let mut warnings = Vec::new();
    let mut history = None;
    let params = match spec.kind {
        ClassifierKind::Logistic => {
            let (p, converged) = logistic::fit(x, &y, classes.len(), spec.l2);
            if !converged {
                warnings.push("logistic regression hit its iteration cap".to_string());
            }
            ModelParams::Logistic(p)
        }
        ClassifierKind::GaussianNb => {
            ModelParams::GaussianNb(naive_bayes::fit(x, &y, classes.len()))
        }
        ClassifierKind::DecisionTree => ModelParams::Tree(tree::fit(
            x,
            &y,
            classes.len(),
            spec.max_depth,
            spec.min_samples_leaf,
        )),
        ClassifierKind::Knn => {
            if spec.k > train.n_rows() {
                return Err(ModelError::InvalidSpec(format!(
                    "k = {} exceeds training size {}",
                    spec.k,
                    train.n_rows()
                )));
            }
            ModelParams::Knn(knn::fit(x, &y, spec.k))
        }
        ClassifierKind::LinearSvm => {
            ModelParams::LinearSvm(linear_svm::fit(x, &y, classes.len(), spec.c))
        }
        ClassifierKind::KernelSvmC | ClassifierKind::KernelSvmNu => {
            ModelParams::KernelSvm(svm::fit(x, &y, classes.len(), spec)?)
        }
        ClassifierKind::Mlp => {
            let arch = NetworkArchitecture {
                layer_sizes: std::iter::once(train.n_features())
                    .chain(spec.hidden_layers.iter().copied())
                    .chain(std::iter::once(classes.len()))
                    .collect(),
                activation: spec.activation,
                dropout_rate: spec.dropout,
                batch_norm: spec.batch_norm,
                optimizer: spec.optimizer,
                learning_rate: spec.learning_rate,
                epochs: spec.epochs,
                batch_size: spec.batch_size,
            };
            let eval_pair = eval.map(|ds| {
                let ey: Vec<usize> = ds
                    .labels()
                    .iter()
                    .map(|l| classes.iter().position(|c| c == l).unwrap_or(usize::MAX))
                    .collect();
                (ds.features().values().to_owned(), ey)
            });
            let (network, hist) = mlp::train(
                &arch,
                x,
                &y,
                eval_pair
                    .as_ref()
                    .map(|(ex, ey)| (ex.view(), ey.as_slice())),
                spec.seed,
            );
            history = Some(hist);
            ModelParams::Mlp(network)
        }
    };

    Ok(TrainedModel {
        spec: spec.clone(),
        classes,
        n_features: train.n_features(),
        params,
        history,
        warnings,
    })
}

/// Predict one label per row; pure and deterministic.
pub fn predict(model: &TrainedModel, features: &DataMatrix) -> Result<Vec<ClassLabel>, ModelError> {
    if !features.is_complete() {
        return Err(ModelError::IncompleteData);
    }
    if features.n_cols() != model.n_features {
        return Err(ModelError::DimensionMismatch {
            expected: model.n_features,
            got: features.n_cols(),
        });
    }
    let x = features.values();
    let class_idx: Vec<usize> = match &model.params {
        ModelParams::Logistic(p) => logistic::predict(p, x),
        ModelParams::GaussianNb(p) => naive_bayes::predict(p, x),
        ModelParams::Tree(p) => tree::predict(p, x),
        ModelParams::Knn(p) => knn::predict(p, x),
        ModelParams::LinearSvm(p) => linear_svm::predict(p, x),
        ModelParams::KernelSvm(p) => svm::predict(p, x),
        ModelParams::Mlp(network) => network.predict(x),
    };
    Ok(class_idx.into_iter().map(|i| model.classes[i]).collect())
}

/// Versioned, self-describing model file: the fitted model plus the scaler
/// that was applied to its training features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub scaler: Option<ScalerParams>,
    pub model: TrainedModel,
}

pub const MODEL_FILE_VERSION: u32 = 1;

impl ModelFile {
    pub fn new(model: TrainedModel, scaler: Option<ScalerParams>) -> Self {
        ModelFile {
            version: MODEL_FILE_VERSION,
            scaler,
            model,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let body = serde_json::to_string_pretty(self).map_err(|e| ModelError::Format(e.to_string()))?;
        std::fs::write(path.as_ref(), body).map_err(|e| ModelError::Io {
            path: path.as_ref().display().to_string(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let body = std::fs::read_to_string(path.as_ref()).map_err(|e| ModelError::Io {
            path: path.as_ref().display().to_string(),
            source: e,
        })?;
        let file: ModelFile =
            serde_json::from_str(&body).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.version != MODEL_FILE_VERSION {
            return Err(ModelError::UnsupportedVersion(file.version));
        }
        Ok(file)
    }
}
