use super::{check_training_set, Algorithm, ClassifierError, ModelParams, TrainedModel, TrainingConfig};
use crate::corpus::SentimentClass;
use crate::vectorizer::FeatureVector;

/// Multinomial NB. Feature weights (counts or TF-IDF) are summed per class:
///
/// `ln P(t|c) = ln((sum_c(t) + alpha) / (sum_c + alpha * V))`, `ln P(c) = ln(n_c / n)`.
pub fn fit_naive_bayes(
    x: &[FeatureVector],
    y: &[SentimentClass],
    cfg: &TrainingConfig,
) -> Result<TrainedModel, ClassifierError> {
    let (dimension, classes) = check_training_set(x, y)?;
    if !(cfg.nb_alpha > 0.0 && cfg.nb_alpha.is_finite()) {
        return Err(ClassifierError::InvalidConfig("nb_alpha must be > 0".into()));
    }
    if let Some(&(_, w)) = x.iter().flat_map(|v| v.entries()).find(|&&(_, w)| w < 0.0) {
        return Err(ClassifierError::NegativeFeature(w));
    }
    let alpha = cfg.nb_alpha;
    let n = x.len() as f64;
    let mut log_priors = Vec::with_capacity(classes.len());
    let mut log_likelihoods = Vec::with_capacity(classes.len());
    for &class in &classes {
        let mut sums = vec![0.0; dimension];
        let mut count = 0usize;
        for (v, _) in x.iter().zip(y).filter(|(_, &label)| label == class) {
            count += 1;
            for &(c, w) in v.entries() {
                sums[c] += w;
            }
        }
        let total: f64 = sums.iter().sum();
        let denom = (total + alpha * dimension as f64).ln();
        log_priors.push((count as f64 / n).ln());
        log_likelihoods.push(sums.iter().map(|s| (s + alpha).ln() - denom).collect());
    }
    Ok(TrainedModel {
        algorithm: Algorithm::NaiveBayes,
        classes,
        vocabulary_id: String::new(),
        dimension,
        params: ModelParams::NaiveBayes {
            log_priors,
            log_likelihoods,
        },
    })
}
