use serde::Serialize;

use crate::cps::PredictiveDistribution;
use crate::error::{Error, Result};

/// CRPS together with whether the tail mass had to be truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrpsValue {
    pub value: f64,
    /// True when the distribution has tail mass, which is then placed on the
    /// truncation points instead of at infinity.
    pub truncated: bool,
}

/// Continuous ranked probability score of the fuzzy distribution function
/// `t -> Q(t, tau)` at the realized label, with the default extent.
pub fn crps(dist: &PredictiveDistribution, y: f64, tau: f64) -> Result<f64> {
    Ok(crps_with_extent(dist, y, tau, default_extent(dist))?.value)
}

/// Truncation distance used by [`crps`]: ten times the mass-weighted
/// interquartile range of the atoms, falling back to their full spread and
/// then to one when the atoms are concentrated.
pub fn default_extent(dist: &PredictiveDistribution) -> f64 {
    let values = dist.values();
    let cumulative = dist.cumulative();
    let Some(&total) = cumulative.last() else {
        return 1.0;
    };
    if total <= 0.0 {
        return 1.0;
    }
    let quantile = |q: f64| {
        let k = cumulative.partition_point(|&c| c / total < q);
        values[k.min(values.len() - 1)]
    };
    let iqr = quantile(0.75) - quantile(0.25);
    let spread = values[values.len() - 1] - values[0];
    10.0 * [iqr, spread, 1.0].into_iter().find(|&s| s > 0.0).unwrap_or(1.0)
}

/// CRPS of the step function `Q(t, tau)` truncated to
/// `[min(c_1, y) - extent, max(c_n, y) + extent]`.
///
/// Below the interval the distribution function is `tau * tail` and above it
/// `1 - (1 - tau) * tail`; truncation sets it to 0 and 1 outside, which is the
/// same as placing `tau * tail` at the lower end and `(1 - tau) * tail` at the
/// upper end. With no tail mass the score is exact.
pub fn crps_with_extent(dist: &PredictiveDistribution, y: f64, tau: f64, extent: f64) -> Result<CrpsValue> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    if !y.is_finite() {
        return Err(Error::invalid(format!("label {y} is not finite")));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::invalid(format!("extent must be positive, got {extent}")));
    }
    let values = dist.values();
    let masses = dist.masses();
    let tail = dist.tail_mass();
    let lower = values.first().map_or(y, |&c| c.min(y)) - extent;
    let upper = values.last().map_or(y, |&c| c.max(y)) + extent;

    let mut total = 0.0;
    let mut cursor = lower;
    let mut level = tau * tail;
    let mut indicator = 0.0;
    let mut step = |to: f64, level: f64, indicator: f64, cursor: &mut f64| {
        let d = level - indicator;
        total += d * d * (to - *cursor);
        *cursor = to;
    };
    let mut y_pending = true;
    for (&c, &p) in values.iter().zip(masses) {
        if y_pending && y <= c {
            step(y, level, indicator, &mut cursor);
            indicator = 1.0;
            y_pending = false;
        }
        step(c, level, indicator, &mut cursor);
        level += p;
    }
    if y_pending {
        step(y, level, indicator, &mut cursor);
        indicator = 1.0;
    }
    step(upper, level, indicator, &mut cursor);
    Ok(CrpsValue {
        value: total,
        truncated: tail > 0.0,
    })
}
