use super::{check_training_set, Algorithm, ClassifierError, ModelParams, TrainedModel, TrainingConfig};
use crate::corpus::SentimentClass;
use crate::vectorizer::FeatureVector;

/// Primal soft-margin objective `(1/2)|w|^2 + C sum max(0, 1 - y_i (w.x_i + b))`.
pub fn hinge_objective(x: &[FeatureVector], signs: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    hinge_objective_and_subgradient(x, signs, w, b, c).0
}

/// Objective plus the subgradient that takes the zero branch at margins of exactly 1.
pub fn hinge_objective_and_subgradient(
    x: &[FeatureVector],
    signs: &[f64],
    w: &[f64],
    b: f64,
    c: f64,
) -> (f64, Vec<f64>, f64) {
    let mut hinge = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (xi, &s) in x.iter().zip(signs) {
        let margin = s * (xi.dot(w) + b);
        if margin < 1.0 {
            hinge += 1.0 - margin;
            for &(col, v) in xi.entries() {
                grad_w[col] -= s * v;
            }
            grad_b -= s;
        }
    }
    let sq: f64 = w.iter().map(|v| v * v).sum();
    for (g, &wj) in grad_w.iter_mut().zip(w) {
        *g = wj + c * *g;
    }
    (0.5 * sq + c * hinge, grad_w, c * grad_b)
}

/// Binary trainer on `signs` in {-1, +1}: subgradient descent from zero with
/// step `rate0 / (1 + t)`. Subgradient steps can raise the objective, so the
/// lowest-objective iterate seen is the one returned. The trace holds the
/// objective of that best iterate at the start of each epoch plus the final
/// one, and is therefore non-increasing.
pub fn train_binary_svm(
    x: &[FeatureVector],
    signs: &[f64],
    dimension: usize,
    cfg: &TrainingConfig,
) -> (Vec<f64>, f64, Vec<f64>) {
    let mut w = vec![0.0; dimension];
    let mut b = 0.0;
    let mut best = (w.clone(), b, f64::INFINITY);
    let mut trace = Vec::with_capacity(cfg.svm_epochs + 1);
    for t in 0..=cfg.svm_epochs {
        let (obj, grad_w, grad_b) = hinge_objective_and_subgradient(x, signs, &w, b, cfg.svm_c);
        if obj < best.2 || !obj.is_finite() {
            best = (w.clone(), b, obj);
        }
        trace.push(best.2);
        if t == cfg.svm_epochs || !obj.is_finite() {
            break;
        }
        let step = cfg.svm_rate0 / (1.0 + t as f64);
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= step * g;
        }
        b -= step * grad_b;
    }
    (best.0, best.1, trace)
}

/// One-vs-rest linear SVM.
pub fn fit_linear_svm(
    x: &[FeatureVector],
    y: &[SentimentClass],
    cfg: &TrainingConfig,
) -> Result<TrainedModel, ClassifierError> {
    let (dimension, classes) = check_training_set(x, y)?;
    cfg.validate()?;
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &class in &classes {
        let signs: Vec<f64> = y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
        let (w, b, trace) = train_binary_svm(x, &signs, dimension, cfg);
        if let Some(epoch) = trace.iter().position(|v| !v.is_finite()) {
            return Err(ClassifierError::Divergence { class, epoch });
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(TrainedModel {
        algorithm: Algorithm::LinearSvm,
        classes,
        vocabulary_id: String::new(),
        dimension,
        params: ModelParams::Linear { weights, biases },
    })
}
