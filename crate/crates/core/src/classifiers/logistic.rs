use super::{check_training_set, Algorithm, ClassifierError, ModelParams, TrainedModel, TrainingConfig};
use crate::corpus::SentimentClass;
use crate::vectorizer::FeatureVector;

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log loss with L2 penalty on the weights (not the bias):
///
/// `L = (1/n) sum[ln(1 + e^z_i) - t_i z_i] + (l2/2) |w|^2`, `z_i = w.x_i + b`.
///
/// Returns `(L, dL/dw, dL/db)`.
pub fn log_loss_and_gradient(
    x: &[FeatureVector],
    targets: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (xi, &t) in x.iter().zip(targets) {
        let z = xi.dot(w) + b;
        loss += softplus(z) - t * z;
        let residual = sigmoid(z) - t;
        for &(c, v) in xi.entries() {
            grad_w[c] += residual * v;
        }
        grad_b += residual;
    }
    let sq: f64 = w.iter().map(|v| v * v).sum();
    loss = loss / n + 0.5 * l2 * sq;
    for (g, &wj) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2 * wj;
    }
    (loss, grad_w, grad_b / n)
}

fn train_binary(
    x: &[FeatureVector],
    targets: &[f64],
    dimension: usize,
    cfg: &TrainingConfig,
    class: SentimentClass,
) -> Result<(Vec<f64>, f64), ClassifierError> {
    let mut w = vec![0.0; dimension];
    let mut b = 0.0;
    for epoch in 0..cfg.lr_epochs {
        let (loss, grad_w, grad_b) = log_loss_and_gradient(x, targets, &w, b, cfg.lr_l2);
        if !loss.is_finite() {
            return Err(ClassifierError::Divergence { class, epoch });
        }
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= cfg.lr_rate * g;
        }
        b -= cfg.lr_rate * grad_b;
    }
    let (loss, _, _) = log_loss_and_gradient(x, targets, &w, b, cfg.lr_l2);
    if !loss.is_finite() || !b.is_finite() {
        return Err(ClassifierError::Divergence {
            class,
            epoch: cfg.lr_epochs,
        });
    }
    Ok((w, b))
}

/// One-vs-rest logistic regression by full-batch gradient descent from zero.
pub fn fit_logistic_regression(
    x: &[FeatureVector],
    y: &[SentimentClass],
    cfg: &TrainingConfig,
) -> Result<TrainedModel, ClassifierError> {
    let (dimension, classes) = check_training_set(x, y)?;
    cfg.validate()?;
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &class in &classes {
        let targets: Vec<f64> = y.iter().map(|&l| if l == class { 1.0 } else { 0.0 }).collect();
        let (w, b) = train_binary(x, &targets, dimension, cfg, class)?;
        weights.push(w);
        biases.push(b);
    }
    Ok(TrainedModel {
        algorithm: Algorithm::LogisticRegression,
        classes,
        vocabulary_id: String::new(),
        dimension,
        params: ModelParams::Linear { weights, biases },
    })
}
