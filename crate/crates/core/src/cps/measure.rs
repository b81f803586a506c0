use crate::error::Result;
use crate::models::DifficultyEstimator;

/// Split conformity measure `A(z_1..z_m, (x, y))` built on a point predictor
/// fitted to the proper training sequence.
///
/// Both variants are affine in `y` with a strictly positive slope, so they are
/// isotonic in the label, and their range over `y` is all of the real line for
/// every `x`, so they are balanced. They depend on the proper training
/// sequence only through the fitted model.
#[derive(Debug, Clone, Default)]
pub enum ConformityMeasure {
    /// `y - mu(x)`
    #[default]
    SignedResidual,
    /// `(y - mu(x)) / sigma(x)`
    NormalizedResidual(DifficultyEstimator),
}

impl ConformityMeasure {
    /// `sigma(x)`; constant 1 for the plain residual.
    pub fn difficulty(&self, x: &[f64]) -> Result<f64> {
        match self {
            ConformityMeasure::SignedResidual => Ok(1.0),
            ConformityMeasure::NormalizedResidual(est) => est.estimate(x),
        }
    }

    /// Conformity score of label `y` given the prediction and `sigma(x)`.
    pub fn score_with(prediction: f64, sigma: f64, y: f64) -> f64 {
        (y - prediction) / sigma
    }

    /// Label whose score is `score`: the inverse of [`Self::score_with`].
    pub fn value_with(prediction: f64, sigma: f64, score: f64) -> f64 {
        prediction + sigma * score
    }

    pub fn score(&self, prediction: f64, x: &[f64], y: f64) -> Result<f64> {
        Ok(Self::score_with(prediction, self.difficulty(x)?, y))
    }
}
