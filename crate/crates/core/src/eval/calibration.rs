use serde::Serialize;

use crate::cps::PredictionInterval;
use crate::error::{Error, Result};

/// Fraction of labels falling inside their intervals.
pub fn coverage(intervals: &[PredictionInterval], labels: &[f64]) -> Result<f64> {
    if intervals.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: intervals.len(),
            got: labels.len(),
        });
    }
    if intervals.is_empty() {
        return Err(Error::Empty("interval list"));
    }
    let hits = intervals.iter().zip(labels).filter(|(iv, &y)| iv.contains(y)).count();
    Ok(hits as f64 / intervals.len() as f64)
}

/// One-sample Kolmogorov–Smirnov test of uniformity on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    /// `c(alpha) / sqrt(m)` with `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
    pub critical_value: f64,
    pub alpha: f64,
    pub sample_size: usize,
    /// `statistic < critical_value`
    pub pass: bool,
}

/// Asymptotic KS coefficient `c(alpha)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn ks_uniformity(values: &[f64], alpha: f64) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::Empty("PIT sample"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("value {v} lies outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| ((i as f64 + 1.0) / m - u).max(u - i as f64 / m))
        .fold(0.0, f64::max);
    let critical_value = ks_coefficient(alpha) / m.sqrt();
    Ok(KsResult {
        statistic,
        critical_value,
        alpha,
        sample_size: sorted.len(),
        pass: statistic < critical_value,
    })
}

/// Equal-width histogram on `[0, 1]`: bins are right-open except the last,
/// which is closed. Values outside `[0, 1]` are not counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// `(low, high)` edges of bin `b`.
    pub fn edges(&self, b: usize) -> (f64, f64) {
        let n = self.bins() as f64;
        (b as f64 / n, (b + 1) as f64 / n)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn pit_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        if (0.0..=1.0).contains(&v) {
            let b = ((v * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    Ok(Histogram { counts })
}
