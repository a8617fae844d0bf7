//! Train/test splitting, confusion matrices and precision/recall/F1.
//!
//! Multiclass metrics are one-vs-rest per class with unweighted (macro)
//! averages; any 0/0 ratio is reported as 0.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{predict, Algorithm, ClassifierError, TrainedModel};
use crate::corpus::{Dataset, Record, SentimentClass};
use crate::rng::SplitRng;
use crate::vectorizer::Featurizer;

pub const DEFAULT_RATIO: f64 = 0.8;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    DegenerateRatio(f64),
    #[error("stratified split needs at least one {0} record")]
    EmptyClass(SentimentClass),
    #[error("record {0} has no label")]
    Unlabeled(String),
    #[error("split of {n} records at ratio {ratio} leaves an empty train or test side")]
    EmptyPartition { n: usize, ratio: f64 },
    #[error("label lists differ in length: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("model was trained on vocabulary {model}, featurizer has {featurizer}")]
    IncompatibleVocabulary { model: String, featurizer: String },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub ratio: f64,
    pub stratified: bool,
}

/// Shuffles with [`SplitRng`] seeded by `seed` and cuts at `ratio`.
///
/// Stratified mode visits classes in canonical order, shuffles each class's
/// records and puts the first `floor(ratio * n_c)` into train. Plain mode
/// shuffles everything and takes `round(ratio * n)`. Both sides keep the
/// input order of their records.
pub fn split(dataset: &Dataset, ratio: f64, seed: u64, stratified: bool) -> Result<SplitResult, EvaluationError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvaluationError::DegenerateRatio(ratio));
    }
    let records = dataset.records();
    let n = records.len();
    let mut rng = SplitRng::new(seed);
    let mut in_train = vec![false; n];
    if stratified {
        let mut by_class: [Vec<usize>; 3] = Default::default();
        for (i, r) in records.iter().enumerate() {
            let label = r.label().ok_or_else(|| EvaluationError::Unlabeled(r.comment.id.clone()))?;
            by_class[label.index()].push(i);
        }
        for class in SentimentClass::ALL {
            let members = &mut by_class[class.index()];
            if members.is_empty() {
                return Err(EvaluationError::EmptyClass(class));
            }
            rng.shuffle(members);
            // The epsilon keeps e.g. 0.8 * 70 = 55.999... from flooring to 55.
            let take = (ratio * members.len() as f64 + 1e-9).floor() as usize;
            for &i in &members[..take] {
                in_train[i] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let take = (ratio * n as f64).round() as usize;
        for &i in &order[..take] {
            in_train[i] = true;
        }
    }
    let n_train = in_train.iter().filter(|&&t| t).count();
    if n_train == 0 || n_train == n {
        return Err(EvaluationError::EmptyPartition { n, ratio });
    }
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (r, t) in records.iter().zip(in_train) {
        (if t { &mut train } else { &mut test }).push(r.clone());
    }
    Ok(SplitResult {
        train: Dataset::new(train, dataset.provenance.clone()),
        test: Dataset::new(test, dataset.provenance.clone()),
        seed,
        ratio,
        stratified,
    })
}

/// Rows are true classes, columns predicted classes, both in canonical order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn get(&self, truth: SentimentClass, predicted: SentimentClass) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_matrix(
    y_true: &[SentimentClass],
    y_pred: &[SentimentClass],
) -> Result<ConfusionMatrix, EvaluationError> {
    if y_true.len() != y_pred.len() {
        return Err(EvaluationError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut m = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        m.counts[t.index()][p.index()] += 1;
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn accuracy(m: &ConfusionMatrix) -> Result<f64, EvaluationError> {
    match m.total() {
        0 => Err(EvaluationError::Empty),
        total => Ok(ratio(m.trace(), total)),
    }
}

/// One-vs-rest precision, recall and F1 for `class`.
pub fn precision_recall_f1(m: &ConfusionMatrix, class: SentimentClass) -> Result<(f64, f64, f64), EvaluationError> {
    if m.total() == 0 {
        return Err(EvaluationError::Empty);
    }
    let c = class.index();
    let tp = m.counts[c][c];
    let predicted: u64 = (0..3).map(|i| m.counts[i][c]).sum();
    let actual: u64 = m.counts[c].iter().sum();
    let p = ratio(tp, predicted);
    let r = ratio(tp, actual);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Ok((p, r, f1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: SentimentClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub algorithm: Algorithm,
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroMetrics,
}

impl EvaluationReport {
    pub fn from_matrix(algorithm: Algorithm, matrix: ConfusionMatrix) -> Result<Self, EvaluationError> {
        let accuracy = accuracy(&matrix)?;
        let per_class = SentimentClass::ALL
            .iter()
            .map(|&class| {
                let (precision, recall, f1) = precision_recall_f1(&matrix, class)?;
                Ok(ClassMetrics {
                    class,
                    precision,
                    recall,
                    f1,
                })
            })
            .collect::<Result<Vec<_>, EvaluationError>>()?;
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / per_class.len() as f64;
        let macro_avg = MacroMetrics {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        };
        Ok(EvaluationReport {
            algorithm,
            matrix,
            accuracy,
            per_class,
            macro_avg,
        })
    }

    pub fn from_labels(
        algorithm: Algorithm,
        y_true: &[SentimentClass],
        y_pred: &[SentimentClass],
    ) -> Result<Self, EvaluationError> {
        Self::from_matrix(algorithm, confusion_matrix(y_true, y_pred)?)
    }

    /// `(metric, value)` pairs in the order they appear in the CSV.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut rows = vec![
            ("accuracy".to_string(), self.accuracy),
            ("macro_precision".to_string(), self.macro_avg.precision),
            ("macro_recall".to_string(), self.macro_avg.recall),
            ("macro_f1".to_string(), self.macro_avg.f1),
        ];
        for m in &self.per_class {
            rows.push((format!("{}_precision", m.class), m.precision));
            rows.push((format!("{}_recall", m.class), m.recall));
            rows.push((format!("{}_f1", m.class), m.f1));
        }
        for t in SentimentClass::ALL {
            for p in SentimentClass::ALL {
                rows.push((format!("confusion_{t}_{p}"), self.matrix.get(t, p) as f64));
            }
        }
        rows
    }

    /// `model,metric,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,metric,value\n");
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        for (metric, value) in self.metrics() {
            let _ = writeln!(out, "{},{metric},{value}", self.algorithm.short_name());
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Labels of a labeled dataset, in record order.
pub fn labels(dataset: &Dataset) -> Result<Vec<SentimentClass>, EvaluationError> {
    dataset
        .records()
        .iter()
        .map(|r: &Record| r.label().ok_or_else(|| EvaluationError::Unlabeled(r.comment.id.clone())))
        .collect()
}

/// Featurizes and predicts every test record, then builds the report.
pub fn evaluate(
    model: &TrainedModel,
    test: &Dataset,
    featurizer: &Featurizer,
) -> Result<EvaluationReport, EvaluationError> {
    if test.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let vocab_id = featurizer.vocabulary.id();
    if !model.vocabulary_id.is_empty() && model.vocabulary_id != vocab_id {
        return Err(EvaluationError::IncompatibleVocabulary {
            model: model.vocabulary_id.clone(),
            featurizer: vocab_id,
        });
    }
    let y_true = labels(test)?;
    let y_pred = test
        .records()
        .iter()
        .map(|r| predict(model, &featurizer.featurize(&r.comment.text)))
        .collect::<Result<Vec<_>, _>>()?;
    EvaluationReport::from_labels(model.algorithm, &y_true, &y_pred)
}
