//! Linear text classifiers trained from scratch.
//!
//! * Multinomial Naive Bayes with additive smoothing.
//! * Logistic regression, one-vs-rest, full-batch gradient descent.
//! * Linear SVM, one-vs-rest, full-batch hinge-loss subgradient descent.
//!
//! All three share [`TrainedModel`], [`predict`] and [`predict_scores`].
//! Training is deterministic: zero initialization, fixed step schedules and
//! fixed summation order, so identical inputs give bit-identical models.

mod logistic;
mod naive_bayes;
mod persist;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentimentClass;
use crate::vectorizer::FeatureVector;

pub use logistic::{fit_logistic_regression, log_loss_and_gradient, sigmoid};
pub use naive_bayes::fit_naive_bayes;
pub use persist::{load_model, save_model, MODEL_MAGIC};
pub use svm::{fit_linear_svm, hinge_objective, hinge_objective_and_subgradient, train_binary_svm};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("feature dimension {found} does not match expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("naive bayes needs non-negative feature weights (found {0})")]
    NegativeFeature(f64),
    #[error("invalid hyperparameter: {0}")]
    InvalidConfig(String),
    #[error("training diverged: non-finite loss at epoch {epoch} for class {class} (learning rate too high?)")]
    Divergence { class: SentimentClass, epoch: usize },
    #[error("model file I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported model format: {0}")]
    VersionMismatch(String),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NaiveBayes,
    LogisticRegression,
    LinearSvm,
}

impl Algorithm {
    /// Canonical reporting order.
    pub const ALL: [Algorithm; 3] = [
        Algorithm::NaiveBayes,
        Algorithm::LogisticRegression,
        Algorithm::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::LinearSvm => "linear_svm",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "NB",
            Algorithm::LogisticRegression => "LR",
            Algorithm::LinearSvm => "SVM",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive_bayes" | "nb" => Ok(Algorithm::NaiveBayes),
            "logistic_regression" | "lr" => Ok(Algorithm::LogisticRegression),
            "linear_svm" | "svm" => Ok(Algorithm::LinearSvm),
            other => Err(other.to_string()),
        }
    }
}

/// Hyperparameters for all three trainers.
///
/// Defaults are tuned for L2-normalized TF-IDF input: a TF-IDF document
/// carries a total weight of only 2 to 3, so NB smoothing is lighter than
/// add-one, and LR needs a large step because mean-loss gradients on rare
/// words are tiny. `svm_rate0 = 1` matches the unit strong convexity of the
/// SVM objective, which makes each iterate an average of past hinge steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub nb_alpha: f64,
    pub lr_rate: f64,
    pub lr_epochs: usize,
    pub lr_l2: f64,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub svm_rate0: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            nb_alpha: 0.5,
            lr_rate: 10.0,
            lr_epochs: 1000,
            lr_l2: 1e-4,
            svm_c: 10.0,
            svm_epochs: 1000,
            svm_rate0: 1.0,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |what: &str| Err(ClassifierError::InvalidConfig(what.to_string()));
        if !(self.nb_alpha > 0.0 && self.nb_alpha.is_finite()) {
            return bad("nb_alpha must be > 0");
        }
        if !(self.lr_rate > 0.0 && self.lr_rate.is_finite()) {
            return bad("lr_rate must be > 0");
        }
        if !(self.lr_l2 >= 0.0 && self.lr_l2.is_finite()) {
            return bad("lr_l2 must be >= 0");
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return bad("svm_c must be > 0");
        }
        if !(self.svm_rate0 > 0.0 && self.svm_rate0.is_finite()) {
            return bad("svm_rate0 must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    /// `log_likelihoods[k][t]` is `ln P(t | classes[k])`.
    NaiveBayes {
        log_priors: Vec<f64>,
        log_likelihoods: Vec<Vec<f64>>,
    },
    /// One weight row and bias per class.
    Linear {
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    /// Classes seen during training, canonical order.
    pub classes: Vec<SentimentClass>,
    pub vocabulary_id: String,
    pub dimension: usize,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn with_vocabulary_id(mut self, id: impl Into<String>) -> Self {
        self.vocabulary_id = id.into();
        self
    }

    pub(crate) fn check_shape(&self) -> Result<(), String> {
        let k = self.classes.len();
        if k == 0 {
            return Err("no classes".into());
        }
        if self.classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err("classes must be unique and in canonical order".into());
        }
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == k && rows.iter().all(|r| r.len() == self.dimension);
        match (&self.params, self.algorithm) {
            (ModelParams::NaiveBayes { log_priors, log_likelihoods }, Algorithm::NaiveBayes) => {
                if log_priors.len() != k || !rows_ok(log_likelihoods) {
                    return Err("naive bayes table shape mismatch".into());
                }
            }
            (ModelParams::Linear { weights, biases }, Algorithm::LogisticRegression | Algorithm::LinearSvm) => {
                if biases.len() != k || !rows_ok(weights) {
                    return Err("weight matrix shape mismatch".into());
                }
            }
            _ => return Err("parameters do not match algorithm tag".into()),
        }
        Ok(())
    }
}

/// Per-class scores: log joint (NB), sigmoid probability (LR) or signed margin (SVM).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub classes: Vec<SentimentClass>,
    pub scores: Vec<f64>,
}

impl ClassScores {
    /// Highest score; ties go to the earliest class in canonical order.
    pub fn argmax(&self) -> SentimentClass {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate().skip(1) {
            if s > self.scores[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn get(&self, class: SentimentClass) -> Option<f64> {
        self.classes.iter().position(|&c| c == class).map(|i| self.scores[i])
    }
}

pub fn predict_scores(model: &TrainedModel, x: &FeatureVector) -> Result<ClassScores, ClassifierError> {
    if x.dimension() != model.dimension {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dimension,
            found: x.dimension(),
        });
    }
    let scores = match &model.params {
        ModelParams::NaiveBayes {
            log_priors,
            log_likelihoods,
        } => log_priors
            .iter()
            .zip(log_likelihoods)
            .map(|(prior, table)| prior + x.dot(table))
            .collect(),
        ModelParams::Linear { weights, biases } => {
            let margins = weights.iter().zip(biases).map(|(w, b)| x.dot(w) + b);
            match model.algorithm {
                Algorithm::LogisticRegression => margins.map(sigmoid).collect(),
                _ => margins.collect(),
            }
        }
    };
    Ok(ClassScores {
        classes: model.classes.clone(),
        scores,
    })
}

pub fn predict(model: &TrainedModel, x: &FeatureVector) -> Result<SentimentClass, ClassifierError> {
    predict_scores(model, x).map(|s| s.argmax())
}

pub fn fit(
    algorithm: Algorithm,
    x: &[FeatureVector],
    y: &[SentimentClass],
    cfg: &TrainingConfig,
) -> Result<TrainedModel, ClassifierError> {
    match algorithm {
        Algorithm::NaiveBayes => fit_naive_bayes(x, y, cfg),
        Algorithm::LogisticRegression => fit_logistic_regression(x, y, cfg),
        Algorithm::LinearSvm => fit_linear_svm(x, y, cfg),
    }
}

/// Checks inputs shared by all trainers; returns (dimension, present classes).
pub(crate) fn check_training_set(
    x: &[FeatureVector],
    y: &[SentimentClass],
) -> Result<(usize, Vec<SentimentClass>), ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            features: x.len(),
            labels: y.len(),
        });
    }
    let first = x.first().ok_or(ClassifierError::EmptyTrainingSet)?;
    let dimension = first.dimension();
    if let Some(bad) = x.iter().find(|v| v.dimension() != dimension) {
        return Err(ClassifierError::DimensionMismatch {
            expected: dimension,
            found: bad.dimension(),
        });
    }
    let classes = SentimentClass::ALL
        .into_iter()
        .filter(|c| y.contains(c))
        .collect();
    Ok((dimension, classes))
}
