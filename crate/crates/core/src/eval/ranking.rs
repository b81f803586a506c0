use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Friedman test over a blocks-by-methods score matrix with the Nemenyi
/// critical difference for mean ranks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSummary {
    /// Mean rank of each method; rank 1 is the lowest score.
    pub mean_ranks: Vec<f64>,
    pub friedman_statistic: f64,
    pub p_value: f64,
    pub critical_difference: f64,
    pub alpha: f64,
    pub blocks: usize,
}

/// Ranks within one block, lowest value first, ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// `rows[b][j]` is the score of method `j` on block `b`; lower is better.
pub fn friedman_nemenyi(rows: &[Vec<f64>], alpha: f64) -> Result<RankSummary> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid("ranking needs at least two blocks"));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::invalid("ranking needs at least two methods"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut mean_ranks = vec![0.0; k];
    for row in rows {
        if row.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: row.len(),
            });
        }
        if row.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("score matrix contains NaN"));
        }
        for (acc, r) in mean_ranks.iter_mut().zip(midranks(row)) {
            *acc += r;
        }
    }
    mean_ranks.iter_mut().for_each(|r| *r /= n as f64);
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let friedman_statistic = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    let p_value = chi.sf(friedman_statistic.max(0.0));
    let critical_difference = nemenyi_q(k, alpha)? * (kf * (kf + 1.0) / (6.0 * nf)).sqrt();
    Ok(RankSummary {
        mean_ranks,
        friedman_statistic,
        p_value,
        critical_difference,
        alpha,
        blocks: n,
    })
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(R <= q)` for the range `R` of `k` independent standard normals.
pub fn studentized_range_cdf(q: f64, k: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    const STEPS: usize = 4000;
    let (a, b) = (-9.0, 9.0);
    let h = (b - a) / STEPS as f64;
    let f = |z: f64| normal_pdf(z) * (normal_cdf(z + q) - normal_cdf(z)).powi(k as i32 - 1);
    let mut sum = f(a) + f(b);
    for i in 1..STEPS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    (k as f64 * sum * h / 3.0).min(1.0)
}

/// Nemenyi critical value `q_alpha`: the upper `alpha` quantile of the
/// studentized range with infinite degrees of freedom, divided by `sqrt(2)`.
pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("Nemenyi test needs at least two methods"));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, 20.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, k) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / std::f64::consts::SQRT_2)
}
