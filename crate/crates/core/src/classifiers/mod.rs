//! Binary classifiers behind one confidence-score interface.
//!
//! Every trained model maps a feature vector to a score in `[0, 1]`; a
//! vector is accepted as the target user at threshold `t` iff
//! `score(x) >= t`.

mod cosine;
mod forest;
mod mlp;
mod perceptron;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

pub use cosine::{build_cosine_template, CosineTemplate};
pub use forest::{train_random_forest, DecisionTree, RandomForest, TreeNode};
pub use mlp::{train_mlp, Dense, Mlp};
pub use perceptron::{train_perceptron, Perceptron};
pub use svm::{
    hinge_objective, solve_smo, train_linear_svm, train_rbf_svm, Kernel, LinearSvm, RbfSvm,
    SmoSolution,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "perceptron")]
    Perceptron,
    #[serde(rename = "linsvm")]
    LinearSvm,
    #[serde(rename = "rbfsvm")]
    RbfSvm,
    #[serde(rename = "rndf")]
    RandomForest,
    #[serde(rename = "mlp")]
    Mlp,
    #[serde(rename = "cosine")]
    Cosine,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Perceptron,
        Algorithm::LinearSvm,
        Algorithm::RbfSvm,
        Algorithm::RandomForest,
        Algorithm::Mlp,
        Algorithm::Cosine,
    ];

    /// The four learned classifiers used throughout the synthetic studies.
    pub const ML: [Algorithm; 4] = [
        Algorithm::LinearSvm,
        Algorithm::RbfSvm,
        Algorithm::RandomForest,
        Algorithm::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Perceptron => "perceptron",
            Algorithm::LinearSvm => "linsvm",
            Algorithm::RbfSvm => "rbfsvm",
            Algorithm::RandomForest => "rndf",
            Algorithm::Mlp => "mlp",
            Algorithm::Cosine => "cosine",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown classifier {s:?}")))
    }
}

fn default_svm_c() -> f64 {
    1e4
}
fn default_svm_tolerance() -> f64 {
    1e-3
}
fn default_svm_max_iterations() -> usize {
    1_000_000
}
fn default_tree_count() -> usize {
    100
}
fn default_hidden() -> Vec<usize> {
    vec![64, 32]
}
fn default_steps() -> usize {
    5000
}
fn default_batch() -> usize {
    50
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_epochs() -> usize {
    1000
}

/// Hyperparameters for every algorithm; each trainer reads the fields it
/// needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_svm_c")]
    pub svm_c: f64,
    /// RBF kernel width; `None` means `1 / feature_count`.
    #[serde(default)]
    pub rbf_gamma: Option<f64>,
    #[serde(default = "default_svm_tolerance")]
    pub svm_tolerance: f64,
    #[serde(default = "default_svm_max_iterations")]
    pub svm_max_iterations: usize,
    #[serde(default = "default_tree_count")]
    pub tree_count: usize,
    /// `None` grows trees until leaves are pure.
    #[serde(default)]
    pub tree_max_depth: Option<usize>,
    #[serde(default = "default_hidden")]
    pub mlp_hidden: Vec<usize>,
    #[serde(default = "default_steps")]
    pub mlp_steps: usize,
    #[serde(default = "default_batch")]
    pub mlp_batch: usize,
    #[serde(default = "default_learning_rate")]
    pub mlp_learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub perceptron_epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            svm_c: default_svm_c(),
            rbf_gamma: None,
            svm_tolerance: default_svm_tolerance(),
            svm_max_iterations: default_svm_max_iterations(),
            tree_count: default_tree_count(),
            tree_max_depth: None,
            mlp_hidden: default_hidden(),
            mlp_steps: default_steps(),
            mlp_batch: default_batch(),
            mlp_learning_rate: default_learning_rate(),
            perceptron_epochs: default_epochs(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return Err(Error::invalid("SVM penalty C must be positive"));
        }
        if let Some(g) = self.rbf_gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid("RBF gamma must be positive"));
            }
        }
        if !(self.svm_tolerance > 0.0 && self.svm_tolerance.is_finite()) {
            return Err(Error::invalid("SVM tolerance must be positive"));
        }
        let counts = [
            self.svm_max_iterations,
            self.tree_count,
            self.mlp_steps,
            self.mlp_batch,
            self.perceptron_epochs,
        ];
        if counts.contains(&0) || self.mlp_hidden.contains(&0) || self.tree_max_depth == Some(0) {
            return Err(Error::invalid("counts must be positive"));
        }
        if !(self.mlp_learning_rate > 0.0 && self.mlp_learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Uniform confidence interface over the trained models.
pub trait Scorer {
    fn feature_count(&self) -> usize;

    /// Score without the dimension check; `x.len()` must equal
    /// `feature_count()`.
    fn score_unchecked(&self, x: &[f64]) -> f64;
}

pub(crate) fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "parameters")]
pub enum ScoringModel {
    #[serde(rename = "perceptron")]
    Perceptron(Perceptron),
    #[serde(rename = "linsvm")]
    LinearSvm(LinearSvm),
    #[serde(rename = "rbfsvm")]
    RbfSvm(RbfSvm),
    #[serde(rename = "rndf")]
    RandomForest(RandomForest),
    #[serde(rename = "mlp")]
    Mlp(Mlp),
    #[serde(rename = "cosine")]
    Cosine(CosineTemplate),
}

impl ScoringModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ScoringModel::Perceptron(_) => Algorithm::Perceptron,
            ScoringModel::LinearSvm(_) => Algorithm::LinearSvm,
            ScoringModel::RbfSvm(_) => Algorithm::RbfSvm,
            ScoringModel::RandomForest(_) => Algorithm::RandomForest,
            ScoringModel::Mlp(_) => Algorithm::Mlp,
            ScoringModel::Cosine(_) => Algorithm::Cosine,
        }
    }

    fn scorer(&self) -> &dyn Scorer {
        match self {
            ScoringModel::Perceptron(m) => m,
            ScoringModel::LinearSvm(m) => m,
            ScoringModel::RbfSvm(m) => m,
            ScoringModel::RandomForest(m) => m,
            ScoringModel::Mlp(m) => m,
            ScoringModel::Cosine(m) => m,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.scorer().feature_count()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let n = self.feature_count();
        if x.len() != n {
            return Err(Error::invalid(format!(
                "vector has {} features, model expects {n}",
                x.len()
            )));
        }
        Ok(self.scorer().score_unchecked(x))
    }

    pub fn score_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            ScoringModel::Perceptron(m) => m.score_unchecked(x),
            ScoringModel::LinearSvm(m) => m.score_unchecked(x),
            ScoringModel::RbfSvm(m) => m.score_unchecked(x),
            ScoringModel::RandomForest(m) => m.score_unchecked(x),
            ScoringModel::Mlp(m) => m.score_unchecked(x),
            ScoringModel::Cosine(m) => m.score_unchecked(x),
        }
    }

    pub fn predict(&self, x: &[f64], threshold: f64) -> Result<Label> {
        Ok(if self.score(x)? >= threshold {
            Label::Positive
        } else {
            Label::Negative
        })
    }
}

pub(crate) fn require_both_classes(train: &LabeledDataset, who: &str) -> Result<()> {
    if !train.has_both_classes() {
        return Err(Error::invalid(format!(
            "{who} needs both positive and negative training samples"
        )));
    }
    Ok(())
}

/// Trains the requested algorithm with its default procedure.
pub fn train(algorithm: Algorithm, train: &LabeledDataset, config: &TrainConfig) -> Result<ScoringModel> {
    config.validate()?;
    Ok(match algorithm {
        Algorithm::Perceptron => ScoringModel::Perceptron(train_perceptron(train, config, None)?),
        Algorithm::LinearSvm => ScoringModel::LinearSvm(train_linear_svm(train, config)?),
        Algorithm::RbfSvm => ScoringModel::RbfSvm(train_rbf_svm(train, config)?),
        Algorithm::RandomForest => ScoringModel::RandomForest(train_random_forest(train, config)?),
        Algorithm::Mlp => ScoringModel::Mlp(train_mlp(train, config)?),
        Algorithm::Cosine => ScoringModel::Cosine(build_cosine_template(train, config)?),
    })
}
