//! Split conformal predictive systems, weighted and unweighted.
//!
//! Calibration turns a held-out sequence into conformity scores. A
//! predictive distribution for a test object places the mass `p_i` of each
//! calibration point at the label whose score equals that point's score, and
//! the test point's own mass `p_test` at `+inf`. Unit likelihood ratios give
//! the ordinary split conformal predictive system.

mod distribution;
mod measure;
pub mod transducer;

pub use distribution::{PredictionInterval, PredictiveDistribution};
pub use measure::ConformityMeasure;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::weights::NormalizedWeights;

/// Two labels closer than this are treated as equal by distribution
/// functions, quantiles and tie merging.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Conformity scores of a calibration sequence, in calibration order.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationScores {
    pub scores: Vec<f64>,
    /// Position of each score in the calibration dataset.
    pub indices: Vec<usize>,
}

impl CalibrationScores {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Scores every calibration point with the fitted model and measure.
pub fn calibrate(model: &Predictor, measure: &ConformityMeasure, calibration: &Dataset) -> Result<CalibrationScores> {
    if calibration.is_empty() {
        return Err(Error::Empty("calibration set"));
    }
    if model.dim() != calibration.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: calibration.dim(),
        });
    }
    let scores = calibration
        .rows()
        .map(|(x, y)| measure.score(model.predict(x), x, y))
        .collect::<Result<Vec<_>>>()?;
    let indices = (0..scores.len()).collect();
    Ok(CalibrationScores { scores, indices })
}

/// Predictive distribution for test object `x` from calibration scores and
/// normalized weights.
pub fn build_distribution(
    scores: &CalibrationScores,
    weights: &NormalizedWeights,
    model: &Predictor,
    measure: &ConformityMeasure,
    x: &[f64],
) -> Result<PredictiveDistribution> {
    if scores.len() != weights.p_cal.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: weights.p_cal.len(),
        });
    }
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let prediction = model.predict(x);
    let sigma = measure.difficulty(x)?;
    let atoms = scores
        .scores
        .iter()
        .zip(&weights.p_cal)
        .map(|(&r, &p)| (ConformityMeasure::value_with(prediction, sigma, r), p))
        .collect();
    PredictiveDistribution::new(atoms, weights.p_test, prediction)
}

/// Calibration scores sorted once together with their unnormalized
/// likelihood ratios, for building many test distributions cheaply.
#[derive(Debug, Clone)]
pub struct WeightedScores {
    scores: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
    /// Factor already divided out of `weights` to keep their sum finite.
    scale: f64,
}

impl WeightedScores {
    /// Unit weights: the unweighted split system.
    pub fn unweighted(scores: &[f64]) -> Result<Self> {
        Self::new(scores, &vec![1.0; scores.len()])
    }

    pub fn new(scores: &[f64], w_cal: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("calibration scores"));
        }
        if scores.len() != w_cal.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.len(),
                got: w_cal.len(),
            });
        }
        for (index, &value) in w_cal.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("calibration score {s} is not finite")));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let mut weights: Vec<f64> = order.iter().map(|&i| w_cal[i]).collect();
        let mut weight_sum: f64 = weights.iter().sum();
        let mut scale = 1.0;
        if !weight_sum.is_finite() {
            scale = weights.iter().copied().fold(0.0, f64::max);
            weights.iter_mut().for_each(|w| *w /= scale);
            weight_sum = weights.iter().sum();
        }
        Ok(Self {
            scores: order.iter().map(|&i| scores[i]).collect(),
            weights,
            weight_sum,
            scale,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Sorted scores.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Distribution for a test object with point prediction `prediction`,
    /// difficulty `sigma` and likelihood ratio `w_test`.
    pub fn distribution(&self, prediction: f64, sigma: f64, w_test: f64) -> Result<PredictiveDistribution> {
        if !(w_test.is_finite() && w_test >= 0.0) {
            return Err(Error::InvalidWeight {
                index: self.len(),
                value: w_test,
            });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("difficulty must be positive, got {sigma}")));
        }
        let w_test = w_test / self.scale;
        let total = self.weight_sum + w_test;
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::ZeroTotalWeight);
        }
        let atoms = self
            .scores
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| (ConformityMeasure::value_with(prediction, sigma, r), w / total));
        PredictiveDistribution::from_sorted(atoms, w_test / total, prediction)
    }
}
