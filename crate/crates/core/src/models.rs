//! Point predictors and the residual-based difficulty estimator used by the
//! normalized conformity measure.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Relative threshold on `|R_jj| / ||column_j||` below which a design column
/// is treated as linearly dependent on the columns before it.
const COLLINEARITY_TOL: f64 = 1e-10;

/// A fitted regression model.
#[derive(Debug, Clone)]
pub enum Predictor {
    Linear(LinearModel),
    Knn(KnnModel),
}

impl Predictor {
    /// Covariate dimension the model was fitted on.
    pub fn dim(&self) -> usize {
        match self {
            Predictor::Linear(m) => m.coefficients.len(),
            Predictor::Knn(m) => m.train.dim(),
        }
    }

    /// Point prediction for `x`, which must have the fitted dimension.
    pub fn predict(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "covariate dimension mismatch");
        match self {
            Predictor::Linear(m) => m.predict(x),
            Predictor::Knn(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, ds: &Dataset) -> Vec<f64> {
        ds.rows().map(|(x, _)| self.predict(x)).collect()
    }
}

/// Ordinary least squares with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

/// Least squares with intercept, solved through a Householder QR
/// factorization of the design matrix `[1 | X]`.
///
/// A column whose component orthogonal to the preceding columns is
/// negligible is reported as collinear instead of being silently dropped.
pub fn fit_linear(train: &Dataset) -> Result<Predictor> {
    let n = train.len();
    let d = train.dim();
    if n <= d {
        return Err(Error::invalid(format!(
            "least squares needs more rows than covariates: {n} rows, {d} covariates"
        )));
    }
    let p = d + 1;
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { train.x(i)[j - 1] });
    let col_norms: Vec<f64> = (0..p).map(|j| design.column(j).norm()).collect();
    let qr = design.qr();
    let r = qr.r();

    let collinear: Vec<usize> = (0..p)
        .filter(|&j| r[(j, j)].abs() <= COLLINEARITY_TOL * col_norms[j].max(f64::MIN_POSITIVE))
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }

    let y = DVector::from_column_slice(train.labels());
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { columns: vec![] })?;

    Ok(Predictor::Linear(LinearModel {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
    }))
}

/// k-nearest-neighbour regressor under Euclidean distance.
#[derive(Debug, Clone)]
pub struct KnnModel {
    train: Dataset,
    k: usize,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let neighbours = k_nearest(self.train.covariates(), self.train.dim(), x, self.k);
        neighbours.iter().map(|&(_, i)| self.train.y(i)).sum::<f64>() / self.k as f64
    }
}

pub fn fit_knn(train: &Dataset, k: usize) -> Result<Predictor> {
    if k == 0 || k > train.len() {
        return Err(Error::invalid(format!(
            "k = {k} outside [1, {}]",
            train.len()
        )));
    }
    Ok(Predictor::Knn(KnnModel {
        train: train.clone(),
        k,
    }))
}

/// The `k` points closest to `query`, as `(squared distance, index)` sorted
/// ascending. Equal distances are ordered by index, so the lower training
/// index wins a tie at the cut-off.
pub(crate) fn k_nearest(points: &[f64], dim: usize, query: &[f64], k: usize) -> Vec<(f64, usize)> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (i, p) in points.chunks_exact(dim).enumerate() {
        let d: f64 = p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.len() == k {
            if d >= best[k - 1].0 {
                continue;
            }
            best.pop();
        }
        // indices arrive in increasing order, so a new point goes after equal distances
        let pos = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(pos, (d, i));
    }
    best
}

/// Local difficulty `sigma(x)`: the mean absolute residual of the `k`
/// reference points nearest to `x`, clamped below by `floor`.
#[derive(Debug, Clone)]
pub struct DifficultyEstimator {
    k: usize,
    floor: f64,
    reference: Option<Reference>,
}

#[derive(Debug, Clone)]
struct Reference {
    dim: usize,
    xs: Vec<f64>,
    abs_residuals: Vec<f64>,
}

impl DifficultyEstimator {
    pub fn new(k: usize, floor: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("difficulty estimator needs k >= 1"));
        }
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::invalid(format!("difficulty floor must be positive, got {floor}")));
        }
        Ok(Self {
            k,
            floor,
            reference: None,
        })
    }

    /// Default floor: `1e-6` times the label standard deviation (or `1e-6`
    /// when the labels are constant).
    pub fn default_floor(labels: &[f64]) -> f64 {
        let n = labels.len() as f64;
        let mean = labels.iter().sum::<f64>() / n;
        let var = labels.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 0.0 {
            1e-6 * sd
        } else {
            1e-6
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn is_fitted(&self) -> bool {
        self.reference.is_some()
    }

    /// Stores the covariates of `held_out` with the given residuals (their
    /// absolute values are used).
    pub fn fit_residuals(&mut self, held_out: &Dataset, residuals: &[f64]) -> Result<()> {
        if residuals.len() != held_out.len() {
            return Err(Error::DimensionMismatch {
                expected: held_out.len(),
                got: residuals.len(),
            });
        }
        if self.k > held_out.len() {
            return Err(Error::invalid(format!(
                "k = {} exceeds the {} reference points",
                self.k,
                held_out.len()
            )));
        }
        if residuals.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("residuals must be finite"));
        }
        self.reference = Some(Reference {
            dim: held_out.dim(),
            xs: held_out.covariates().to_vec(),
            abs_residuals: residuals.iter().map(|r| r.abs()).collect(),
        });
        Ok(())
    }

    /// Fits on the residuals of `model` over `held_out`.
    pub fn fit(&mut self, model: &Predictor, held_out: &Dataset) -> Result<()> {
        let residuals: Vec<f64> = held_out.rows().map(|(x, y)| y - model.predict(x)).collect();
        self.fit_residuals(held_out, &residuals)
    }

    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        let reference = self.reference.as_ref().ok_or(Error::NotFitted)?;
        if x.len() != reference.dim {
            return Err(Error::DimensionMismatch {
                expected: reference.dim,
                got: x.len(),
            });
        }
        let neighbours = k_nearest(&reference.xs, reference.dim, x, self.k);
        let mean = neighbours
            .iter()
            .map(|&(_, i)| reference.abs_residuals[i])
            .sum::<f64>()
            / self.k as f64;
        Ok(mean.max(self.floor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;

    fn line_data() -> Dataset {
        Dataset::new(1, vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn exact_line() {
        let Predictor::Linear(m) = fit_linear(&line_data()).unwrap() else {
            unreachable!()
        };
        assert!((m.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(m.intercept.abs() < 1e-12);
    }

    #[test]
    fn underdetermined_and_collinear_designs_fail() {
        let ds = Dataset::new(2, vec![0.0, 1.0, 1.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_linear(&ds), Err(Error::InvalidInput(_))));

        // x2 = 2 * x1
        let ds = Dataset::new(
            2,
            vec![0.0, 0.0, 1.0, 2.0, 2.0, 4.0, 3.0, 6.0],
            vec![1.0, 2.0, 3.0, 5.0],
        )
        .unwrap();
        match fit_linear(&ds) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec![2]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }

        // constant covariate duplicates the intercept
        let ds = Dataset::new(1, vec![3.0, 3.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        match fit_linear(&ds) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec![1]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn ols_recovers_synthetic_coefficients() {
        let split = generate_synthetic(10_000, 1, 1, false, 17).unwrap();
        let Predictor::Linear(m) = fit_linear(&split.proper_train).unwrap() else {
            unreachable!()
        };
        assert!((m.intercept - 210.0).abs() < 0.5);
        for (c, truth) in m.coefficients.iter().zip([27.4, 13.7, 13.7, 13.7]) {
            assert!((c - truth).abs() < 0.1, "{c} vs {truth}");
        }
    }

    #[test]
    fn ols_residuals_orthogonal_to_design() {
        let split = generate_synthetic(500, 1, 1, false, 4).unwrap();
        let train = &split.proper_train;
        let model = fit_linear(train).unwrap();
        let residuals: Vec<f64> = train.rows().map(|(x, y)| y - model.predict(x)).collect();
        let scale: f64 = train.labels().iter().map(|y| y.abs()).sum();
        assert!(residuals.iter().sum::<f64>().abs() < 1e-8 * scale);
        for j in 0..train.dim() {
            let dot: f64 = train.rows().zip(&residuals).map(|((x, _), r)| x[j] * r).sum();
            assert!(dot.abs() < 1e-8 * scale, "column {j}: {dot}");
        }
    }

    #[test]
    fn knn_examples() {
        let ds = Dataset::new(1, vec![0.0, 1.0, 10.0], vec![1.0, 2.0, 4.0]).unwrap();
        let all = fit_knn(&ds, 3).unwrap();
        for q in [-5.0, 0.5, 100.0] {
            assert!((all.predict(&[q]) - 7.0 / 3.0).abs() < 1e-12);
        }
        let one = fit_knn(&ds, 1).unwrap();
        assert_eq!(one.predict(&[10.0]), 4.0);
        let two = fit_knn(&ds, 2).unwrap();
        assert_eq!(two.predict(&[0.4]), 1.5);
        assert!(fit_knn(&ds, 0).is_err());
        assert!(fit_knn(&ds, 4).is_err());
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // both neighbours at distance 1 from the query
        let ds = Dataset::new(1, vec![1.0, -1.0], vec![10.0, 20.0]).unwrap();
        assert_eq!(fit_knn(&ds, 1).unwrap().predict(&[0.0]), 10.0);
        let ds = Dataset::new(1, vec![-1.0, 1.0], vec![10.0, 20.0]).unwrap();
        assert_eq!(fit_knn(&ds, 1).unwrap().predict(&[0.0]), 10.0);
    }

    #[test]
    fn k_nearest_matches_full_sort() {
        let split = generate_synthetic(300, 1, 50, false, 8).unwrap();
        let train = &split.proper_train;
        for (q, _) in split.test.rows() {
            let fast = k_nearest(train.covariates(), 4, q, 7);
            let mut all: Vec<(f64, usize)> = train
                .rows()
                .enumerate()
                .map(|(i, (x, _))| (x.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(fast, all[..7].to_vec());
        }
    }

    #[test]
    fn difficulty_examples() {
        let ds = Dataset::new(1, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let mut est = DifficultyEstimator::new(2, 1e-6).unwrap();
        assert!(matches!(est.estimate(&[0.0]), Err(Error::NotFitted)));

        est.fit_residuals(&ds, &[2.0, -2.0]).unwrap();
        assert_eq!(est.estimate(&[5.0]).unwrap(), 2.0);

        est.fit_residuals(&ds, &[1.0, 3.0]).unwrap();
        assert_eq!(est.estimate(&[0.3]).unwrap(), 2.0);

        est.fit_residuals(&ds, &[0.0, 0.0]).unwrap();
        assert_eq!(est.estimate(&[0.3]).unwrap(), 1e-6);
    }

    #[test]
    fn difficulty_rejects_bad_configuration() {
        assert!(DifficultyEstimator::new(0, 1.0).is_err());
        assert!(DifficultyEstimator::new(1, 0.0).is_err());
        let ds = Dataset::new(1, vec![0.0], vec![0.0]).unwrap();
        let mut est = DifficultyEstimator::new(2, 1.0).unwrap();
        assert!(est.fit_residuals(&ds, &[1.0]).is_err());
    }

    #[test]
    fn knn_prediction_within_label_range() {
        let split = generate_synthetic(200, 1, 100, true, 21).unwrap();
        let model = fit_knn(&split.proper_train, 5).unwrap();
        let labels = split.proper_train.labels();
        let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (x, _) in split.shifted_test.as_ref().unwrap().rows() {
            let p = model.predict(x);
            assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }
}
