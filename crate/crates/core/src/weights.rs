//! Likelihood ratios `w(x) = dP_test(x) / dP_train(x)`, their normalization
//! into probability masses over the calibration points and the test point,
//! and the effective sample size of a weight vector.

use nalgebra::{DMatrix, DVector};

use crate::data::TiltSpec;
use crate::error::{Error, Result};

/// Source of likelihood ratios for covariate vectors.
#[derive(Debug, Clone)]
pub enum LikelihoodRatioProvider {
    /// `w(x) = 1`: no shift.
    Unit,
    /// Known exponential tilt `w(x) = exp(beta . x)`.
    Oracle(TiltSpec),
    /// Odds of a logistic discriminator between source and target covariates.
    Estimated(LogisticRatio),
}

impl LikelihoodRatioProvider {
    pub fn ratio(&self, x: &[f64]) -> f64 {
        match self {
            LikelihoodRatioProvider::Unit => 1.0,
            LikelihoodRatioProvider::Oracle(tilt) => tilt.log_weight(x).exp(),
            LikelihoodRatioProvider::Estimated(model) => model.ratio(x),
        }
    }

    /// Ratios for every row of a row-major covariate buffer.
    pub fn ratios(&self, xs: &[f64], dim: usize) -> Vec<f64> {
        xs.chunks_exact(dim).map(|x| self.ratio(x)).collect()
    }
}

/// `exp(beta . x)`. Overflow yields `+inf`, which [`normalize_weights`] rejects.
pub fn oracle_ratio(beta: &[f64], x: &[f64]) -> Result<f64> {
    if beta.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: beta.len(),
            got: x.len(),
        });
    }
    Ok(beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>().exp())
}

/// Settings for the logistic density-ratio fit.
#[derive(Debug, Clone, Copy)]
pub struct RatioFitOptions {
    /// Ridge penalty on the non-intercept coefficients (in standardized units).
    pub l2: f64,
    pub max_iterations: usize,
    /// Stop once the gradient norm of the log-likelihood falls below this.
    pub gradient_tolerance: f64,
    /// Stop, after taking the full step, once the Newton decrement
    /// `g' H^-1 g` falls below this: the remaining gain in log-likelihood is
    /// then below what the objective can resolve in floating point.
    pub decrement_tolerance: f64,
    /// Probabilities are clipped to `[clip, 1 - clip]` before taking odds.
    pub probability_clip: f64,
}

impl Default for RatioFitOptions {
    fn default() -> Self {
        Self {
            l2: 0.0,
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            decrement_tolerance: 1e-8,
            probability_clip: 1e-6,
        }
    }
}

/// Outcome flags of the Newton iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioFitDiagnostics {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// The classes were perfectly separated; the fit stopped once every
    /// clipped probability saturated.
    pub separated: bool,
}

/// Logistic model of `P(target | x)`, with covariates standardized by the
/// pooled mean and standard deviation.
#[derive(Debug, Clone)]
pub struct LogisticRatio {
    center: Vec<f64>,
    scale: Vec<f64>,
    /// Intercept first, then one coefficient per standardized covariate.
    coefficients: Vec<f64>,
    /// `|source| / |target|`, undoing the class-size imbalance in the odds.
    class_ratio: f64,
    clip: f64,
    diagnostics: RatioFitDiagnostics,
}

impl LogisticRatio {
    pub fn diagnostics(&self) -> RatioFitDiagnostics {
        self.diagnostics
    }

    /// Fitted `P(target | x)`, unclipped.
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }

    pub fn ratio(&self, x: &[f64]) -> f64 {
        let p = self.probability(x).clamp(self.clip, 1.0 - self.clip);
        p / (1.0 - p) * self.class_ratio
    }

    fn linear_predictor(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.center.len());
        self.coefficients[0]
            + x.iter()
                .zip(&self.center)
                .zip(&self.scale)
                .zip(&self.coefficients[1..])
                .map(|(((v, c), s), b)| b * (v - c) / s)
                .sum::<f64>()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Estimates `w(x)` with the default options.
pub fn estimate_ratio(source_x: &[f64], target_x: &[f64], dim: usize) -> Result<LikelihoodRatioProvider> {
    estimate_ratio_with(source_x, target_x, dim, &RatioFitOptions::default())
}

/// Fits a logistic discriminator (target = 1, source = 0) by Newton's method
/// (iteratively reweighted least squares) with step halving, and returns the
/// class-size corrected odds as a likelihood ratio.
pub fn estimate_ratio_with(
    source_x: &[f64],
    target_x: &[f64],
    dim: usize,
    options: &RatioFitOptions,
) -> Result<LikelihoodRatioProvider> {
    if dim == 0 {
        return Err(Error::invalid("covariate dimension must be at least 1"));
    }
    if source_x.is_empty() {
        return Err(Error::Empty("source covariate set"));
    }
    if target_x.is_empty() {
        return Err(Error::Empty("target covariate set"));
    }
    for xs in [source_x, target_x] {
        if xs.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: xs.len() % dim,
            });
        }
    }
    if source_x.iter().chain(target_x).any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariates must be finite"));
    }
    if !(options.probability_clip > 0.0 && options.probability_clip < 0.5) {
        return Err(Error::invalid("probability clip must lie in (0, 0.5)"));
    }
    if !(options.l2 >= 0.0 && options.l2.is_finite()) {
        return Err(Error::invalid("l2 penalty must be finite and nonnegative"));
    }

    let n_source = source_x.len() / dim;
    let n_target = target_x.len() / dim;
    let n = n_source + n_target;
    let p = dim + 1;

    let mut center = vec![0.0; dim];
    for x in source_x.chunks_exact(dim).chain(target_x.chunks_exact(dim)) {
        for (c, v) in center.iter_mut().zip(x) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= n as f64);
    let mut scale = vec![0.0; dim];
    for x in source_x.chunks_exact(dim).chain(target_x.chunks_exact(dim)) {
        for ((s, v), c) in scale.iter_mut().zip(x).zip(&center) {
            *s += (v - c) * (v - c);
        }
    }
    scale.iter_mut().for_each(|s| {
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    });

    let design = DMatrix::from_fn(n, p, |i, j| {
        if j == 0 {
            return 1.0;
        }
        let v = if i < n_source {
            source_x[i * dim + j - 1]
        } else {
            target_x[(i - n_source) * dim + j - 1]
        };
        (v - center[j - 1]) / scale[j - 1]
    });
    let labels = DVector::from_fn(n, |i, _| if i < n_source { 0.0 } else { 1.0 });

    let penalty = |beta: &DVector<f64>| -> f64 {
        0.5 * options.l2 * beta.iter().skip(1).map(|b| b * b).sum::<f64>()
    };
    let objective = |beta: &DVector<f64>| -> f64 {
        let eta = &design * beta;
        eta.iter()
            .zip(labels.iter())
            .map(|(e, t)| t * e - softplus(*e))
            .sum::<f64>()
            - penalty(beta)
    };

    let clip = options.probability_clip;
    let mut beta = DVector::zeros(p);
    let mut current = objective(&beta);
    let mut diagnostics = RatioFitDiagnostics {
        iterations: 0,
        gradient_norm: f64::INFINITY,
        converged: false,
        separated: false,
    };

    for iteration in 0..options.max_iterations {
        diagnostics.iterations = iteration;
        let eta = &design * &beta;
        let probs = eta.map(sigmoid);

        let mut gradient = design.tr_mul(&(&labels - &probs));
        for j in 1..p {
            gradient[j] -= options.l2 * beta[j];
        }
        diagnostics.gradient_norm = gradient.norm();
        if diagnostics.gradient_norm < options.gradient_tolerance {
            diagnostics.converged = true;
            break;
        }
        let saturated = probs
            .iter()
            .zip(labels.iter())
            .all(|(q, t)| if *t > 0.5 { *q >= 1.0 - clip } else { *q <= clip });
        if saturated {
            diagnostics.separated = true;
            diagnostics.converged = true;
            break;
        }

        let weights = probs.map(|q| q * (1.0 - q));
        let mut scaled = design.clone();
        for (mut row, w) in scaled.row_iter_mut().zip(weights.iter()) {
            row *= *w;
        }
        let mut hessian = design.tr_mul(&scaled);
        for j in 1..p {
            hessian[(j, j)] += options.l2;
        }
        let Some(chol) = hessian.cholesky() else {
            // curvature vanished: probabilities are pinned at 0 or 1
            diagnostics.separated = true;
            diagnostics.converged = true;
            break;
        };
        let direction = chol.solve(&gradient);
        let decrement = gradient.dot(&direction);
        if decrement < options.decrement_tolerance {
            beta += &direction;
            diagnostics.iterations = iteration + 1;
            diagnostics.gradient_norm = gradient.norm();
            diagnostics.converged = true;
            break;
        }

        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let candidate = &beta + step * &direction;
            let value = objective(&candidate);
            if value.is_finite() && value >= current {
                beta = candidate;
                current = value;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            // objective flat to machine precision
            diagnostics.converged = true;
            break;
        }
        diagnostics.iterations = iteration + 1;
    }

    Ok(LikelihoodRatioProvider::Estimated(LogisticRatio {
        center,
        scale,
        coefficients: beta.iter().copied().collect(),
        class_ratio: n_source as f64 / n_target as f64,
        clip,
        diagnostics,
    }))
}

/// Calibration masses `p_i = w_i / (sum_j w_j + w_test)` and the test mass
/// `p_test = w_test / (sum_j w_j + w_test)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWeights {
    pub p_cal: Vec<f64>,
    pub p_test: f64,
}

impl NormalizedWeights {
    /// Equal masses `1 / (n + 1)`: the unshifted case.
    pub fn uniform(n_cal: usize) -> Self {
        let m = 1.0 / (n_cal as f64 + 1.0);
        Self {
            p_cal: vec![m; n_cal],
            p_test: m,
        }
    }

    pub fn total(&self) -> f64 {
        self.p_cal.iter().sum::<f64>() + self.p_test
    }
}

fn check_weight(index: usize, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight { index, value })
    }
}

pub fn normalize_weights(w_cal: &[f64], w_test: f64) -> Result<NormalizedWeights> {
    for (i, &w) in w_cal.iter().enumerate() {
        check_weight(i, w)?;
    }
    check_weight(w_cal.len(), w_test)?;
    let mut total = w_cal.iter().sum::<f64>() + w_test;
    let mut rescale = 1.0;
    if total.is_infinite() {
        // finite weights whose sum overflows: normalize by the largest first
        rescale = w_cal.iter().copied().fold(w_test, f64::max);
        total = w_cal.iter().map(|w| w / rescale).sum::<f64>() + w_test / rescale;
    }
    if total <= 0.0 {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(NormalizedWeights {
        p_cal: w_cal.iter().map(|w| w / rescale / total).collect(),
        p_test: w_test / rescale / total,
    })
}

/// Effective sample size `||w||_1^2 / ||w||_2^2`.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty("weight vector"));
    }
    for (i, &w) in weights.iter().enumerate() {
        check_weight(i, w)?;
    }
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::ZeroTotalWeight);
    }
    let (l1, l2) = weights.iter().fold((0.0, 0.0), |(l1, l2), w| {
        let v = w / max;
        (l1 + v, l2 + v * v)
    });
    Ok(l1 * l1 / l2)
}
