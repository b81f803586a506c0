//! Datasets, the synthetic covariate-shift generator, the airfoil loader,
//! random splitting and exponential-tilt resampling.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Intercept of the synthetic regression function.
pub const SYNTHETIC_INTERCEPT: f64 = 210.0;
/// Coefficients of the synthetic regression function.
pub const SYNTHETIC_COEFFICIENTS: [f64; 4] = [27.4, 13.7, 13.7, 13.7];
/// Mean of the shifted synthetic covariates, i.e. the tilt vector `b` of
/// `w(x) = exp(b . x)`.
pub const SYNTHETIC_TILT: [f64; 4] = [-1.0, 0.5, -0.25, -0.1];
/// Tilt applied to the (log-transformed) airfoil covariates.
pub const AIRFOIL_TILT: [f64; 5] = [-1.0, 0.0, 0.0, 0.0, 1.0];
/// Number of whitespace-separated columns in the airfoil file.
pub const AIRFOIL_COLUMNS: usize = 6;

/// A single labelled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
}

/// A nonempty, immutable sequence of observations sharing one covariate
/// dimension. Covariates are stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from a row-major covariate buffer and labels.
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if dim == 0 {
            return Err(Error::invalid("covariate dimension must be at least 1"));
        }
        if xs.len() != dim * ys.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * ys.len(),
                got: xs.len(),
            });
        }
        if let Some(pos) = xs.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite covariate in row {}",
                pos / dim
            )));
        }
        if let Some(pos) = ys.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite label in row {pos}")));
        }
        Ok(Self { dim, xs, ys })
    }

    pub fn from_observations(observations: &[Observation]) -> Result<Self> {
        let first = observations.first().ok_or(Error::Empty("dataset"))?;
        let dim = first.x.len();
        let mut xs = Vec::with_capacity(dim * observations.len());
        let mut ys = Vec::with_capacity(observations.len());
        for obs in observations {
            if obs.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: obs.x.len(),
                });
            }
            xs.extend_from_slice(&obs.x);
            ys.push(obs.y);
        }
        Self::new(dim, xs, ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    /// Always false; datasets are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Covariates of row `i`.
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.ys
    }

    /// Row-major covariate buffer.
    pub fn covariates(&self) -> &[f64] {
        &self.xs
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.xs.chunks_exact(self.dim).zip(self.ys.iter().copied())
    }

    pub fn observation(&self, i: usize) -> Observation {
        Observation {
            x: self.x(i).to_vec(),
            y: self.ys[i],
        }
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("subset"));
        }
        let mut xs = Vec::with_capacity(indices.len() * self.dim);
        let mut ys = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!(
                    "row index {i} out of range for dataset of {} rows",
                    self.len()
                )));
            }
            xs.extend_from_slice(self.x(i));
            ys.push(self.ys[i]);
        }
        Ok(Self {
            dim: self.dim,
            xs,
            ys,
        })
    }

    /// Writes the dataset as CSV with header `x1,...,xd,y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let csv_err = |source| Error::Csv {
            path: "<dataset>".into(),
            source,
        };
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        header.push("y".to_string());
        wtr.write_record(&header).map_err(csv_err)?;
        for (x, y) in self.rows() {
            let record: Vec<String> = x
                .iter()
                .chain(std::iter::once(&y))
                .map(|v| v.to_string())
                .collect();
            wtr.write_record(&record).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io("<dataset>", e))?;
        Ok(())
    }

    /// Reads a CSV written by [`Dataset::write_csv`]; the last column is the label.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let width = rdr
            .headers()
            .map_err(|source| Error::Csv {
                path: "<dataset>".into(),
                source,
            })?
            .len();
        if width < 2 {
            return Err(Error::Format(
                "dataset CSV needs at least one covariate column and a label".into(),
            ));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|source| Error::Csv {
                path: "<dataset>".into(),
                source,
            })?;
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid number {field:?}"),
                })?;
                if j + 1 == width {
                    ys.push(v);
                } else {
                    xs.push(v);
                }
            }
        }
        Self::new(width - 1, xs, ys)
    }
}

/// Proper-training, calibration and test blocks, plus an optional
/// covariate-shifted test block.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub proper_train: Dataset,
    pub calibration: Dataset,
    pub test: Dataset,
    pub shifted_test: Option<Dataset>,
}

/// Exponential tilt `w(x) = exp(beta . x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltSpec {
    beta: Vec<f64>,
}

impl TiltSpec {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Empty("tilt vector"));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("tilt vector entries must be finite"));
        }
        Ok(Self { beta })
    }

    pub fn synthetic() -> Self {
        Self {
            beta: SYNTHETIC_TILT.to_vec(),
        }
    }

    pub fn airfoil() -> Self {
        Self {
            beta: AIRFOIL_TILT.to_vec(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            beta: vec![0.0; dim],
        }
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|&b| b == 0.0)
    }

    /// `beta . x`
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.beta.len());
        self.beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

/// Synthetic regression function plus noise.
pub fn synthetic_label(x: &[f64], noise: f64) -> f64 {
    SYNTHETIC_INTERCEPT
        + SYNTHETIC_COEFFICIENTS
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
        + noise
}

/// `n` covariate vectors drawn from `N(mean, I)`, row-major.
pub fn sample_gaussian_covariates<R: Rng + ?Sized>(n: usize, mean: &[f64], rng: &mut R) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n * mean.len());
    for _ in 0..n {
        for m in mean {
            let z: f64 = rng.sample(StandardNormal);
            xs.push(m + z);
        }
    }
    xs
}

/// `n` labelled synthetic observations with covariates from `N(mean, I4)`.
pub fn sample_synthetic<R: Rng + ?Sized>(n: usize, mean: &[f64], rng: &mut R) -> Result<Dataset> {
    if mean.len() != SYNTHETIC_COEFFICIENTS.len() {
        return Err(Error::DimensionMismatch {
            expected: SYNTHETIC_COEFFICIENTS.len(),
            got: mean.len(),
        });
    }
    let xs = sample_gaussian_covariates(n, mean, rng);
    let ys = xs
        .chunks_exact(mean.len())
        .map(|x| {
            let eps: f64 = rng.sample(StandardNormal);
            synthetic_label(x, eps)
        })
        .collect();
    Dataset::new(mean.len(), xs, ys)
}

/// Synthetic split with the default shift `b = (-1, 0.5, -0.25, -0.1)` when
/// `shifted` is set.
pub fn generate_synthetic(
    n_train: usize,
    n_cal: usize,
    n_test: usize,
    shifted: bool,
    seed: u64,
) -> Result<SplitData> {
    let tilt = TiltSpec::synthetic();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_synthetic_with(n_train, n_cal, n_test, shifted.then_some(&tilt), &mut rng)
}

/// Synthetic split drawing training, calibration and test covariates from
/// `N(0, I4)`. With a tilt `beta`, the shifted test block (of size `n_test`)
/// is drawn from `N(beta, I4)`: exponentially tilting a standard Gaussian by
/// `exp(beta . x)` shifts its mean to `beta`.
pub fn generate_synthetic_with<R: Rng + ?Sized>(
    n_train: usize,
    n_cal: usize,
    n_test: usize,
    shift: Option<&TiltSpec>,
    rng: &mut R,
) -> Result<SplitData> {
    if n_train == 0 || n_cal == 0 || n_test == 0 {
        return Err(Error::invalid("synthetic block sizes must be at least 1"));
    }
    let origin = [0.0; 4];
    let proper_train = sample_synthetic(n_train, &origin, rng)?;
    let calibration = sample_synthetic(n_cal, &origin, rng)?;
    let test = sample_synthetic(n_test, &origin, rng)?;
    let shifted_test = match shift {
        Some(tilt) => Some(sample_synthetic(n_test, tilt.beta(), rng)?),
        None => None,
    };
    Ok(SplitData {
        proper_train,
        calibration,
        test,
        shifted_test,
    })
}

/// Loads the UCI airfoil self-noise table.
///
/// Columns: frequency (Hz), angle of attack (deg), chord length (m),
/// free-stream velocity (m/s), suction-side displacement thickness (m) and
/// the sound pressure level (dB), which becomes the label. Frequency and
/// displacement thickness are replaced by their natural logarithms.
pub fn load_airfoil(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_airfoil(BufReader::new(file))
}

/// Parses airfoil rows from any buffered reader. Blank lines are skipped.
pub fn parse_airfoil<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<airfoil>", e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != AIRFOIL_COLUMNS {
            return Err(Error::Format(format!(
                "line {lineno}: expected {AIRFOIL_COLUMNS} columns, found {}",
                fields.len()
            )));
        }
        let mut row = [0.0f64; AIRFOIL_COLUMNS];
        for (slot, field) in row.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid number {field:?}"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite value {field:?}"),
                });
            }
        }
        for col in [0, 4] {
            if row[col] <= 0.0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("column {} must be positive to take its logarithm", col + 1),
                });
            }
        }
        xs.extend_from_slice(&[row[0].ln(), row[1], row[2], row[3], row[4].ln()]);
        ys.push(row[5]);
    }
    if ys.is_empty() {
        return Err(Error::Format("airfoil file contains no rows".into()));
    }
    Dataset::new(AIRFOIL_COLUMNS - 1, xs, ys)
}

/// Writes an airfoil dataset back in the raw six-column format, undoing the
/// log transform of columns 1 and 5.
pub fn write_airfoil<W: Write>(ds: &Dataset, mut writer: W) -> Result<()> {
    if ds.dim() != AIRFOIL_COLUMNS - 1 {
        return Err(Error::DimensionMismatch {
            expected: AIRFOIL_COLUMNS - 1,
            got: ds.dim(),
        });
    }
    for (x, y) in ds.rows() {
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}\t{}",
            x[0].exp(),
            x[1],
            x[2],
            x[3],
            x[4].exp(),
            y
        )
        .map_err(|e| Error::io("<airfoil>", e))?;
    }
    Ok(())
}

/// Block sizes for a dataset of `n` rows: `floor(f * n)` for training and
/// calibration, and the test block takes the rest of the selected rows,
/// `floor((f_train + f_cal + f_test) * n)` in total.
pub fn split_sizes(n: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (f_train, f_cal, f_test) = fractions;
    let all = [f_train, f_cal, f_test];
    if all.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::invalid("split fractions must be positive"));
    }
    let total = f_train + f_cal + f_test;
    if total > 1.0 + 1e-9 {
        return Err(Error::invalid(format!("split fractions sum to {total} > 1")));
    }
    let nf = n as f64;
    let n_train = (f_train * nf).floor() as usize;
    let n_cal = (f_cal * nf).floor() as usize;
    let selected = ((total * nf + 1e-9).floor() as usize).min(n);
    let n_test = selected.saturating_sub(n_train + n_cal);
    if n_train == 0 || n_cal == 0 || n_test == 0 {
        return Err(Error::invalid(format!(
            "split of {n} rows leaves an empty block: ({n_train}, {n_cal}, {n_test})"
        )));
    }
    Ok((n_train, n_cal, n_test))
}

/// Random split into proper-training, calibration and test blocks.
pub fn split_dataset(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<SplitData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    split_dataset_with(ds, fractions, &mut rng)
}

/// Permutes the rows with `rng` and assigns contiguous blocks.
pub fn split_dataset_with<R: Rng + ?Sized>(
    ds: &Dataset,
    fractions: (f64, f64, f64),
    rng: &mut R,
) -> Result<SplitData> {
    let (n_train, n_cal, n_test) = split_sizes(ds.len(), fractions)?;
    let mut perm: Vec<usize> = (0..ds.len()).collect();
    perm.shuffle(rng);
    let (train_idx, rest) = perm.split_at(n_train);
    let (cal_idx, rest) = rest.split_at(n_cal);
    let test_idx = &rest[..n_test];
    Ok(SplitData {
        proper_train: ds.subset(train_idx)?,
        calibration: ds.subset(cal_idx)?,
        test: ds.subset(test_idx)?,
        shifted_test: None,
    })
}

/// Selection probabilities proportional to `exp(beta . x)`, computed after
/// subtracting the largest exponent.
pub fn selection_probabilities(ds: &Dataset, tilt: &TiltSpec) -> Result<Vec<f64>> {
    if tilt.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: tilt.dim(),
        });
    }
    let logs: Vec<f64> = ds.rows().map(|(x, _)| tilt.log_weight(x)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / total).collect())
}

/// Resamples `n_out` rows (default `|ds|`) with replacement, with
/// probabilities proportional to `exp(beta . x)`.
pub fn tilt_resample(
    ds: &Dataset,
    tilt: &TiltSpec,
    n_out: Option<usize>,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tilt_resample_with(ds, tilt, n_out, &mut rng)
}

pub fn tilt_resample_with<R: Rng + ?Sized>(
    ds: &Dataset,
    tilt: &TiltSpec,
    n_out: Option<usize>,
    rng: &mut R,
) -> Result<Dataset> {
    let probs = selection_probabilities(ds, tilt)?;
    let sampler = WeightedIndex::new(&probs)
        .map_err(|e| Error::invalid(format!("tilt probabilities: {e}")))?;
    let n_out = n_out.unwrap_or(ds.len());
    let picks: Vec<usize> = (0..n_out).map(|_| sampler.sample(rng)).collect();
    ds.subset(&picks)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST_ROWS: &str = "800\t0\t0.3048\t71.3\t0.00266337\t126.201\n\
                              1000\t0\t0.3048\t71.3\t0.00266337\t125.201\n\
                              1250\t0\t0.3048\t71.3\t0.00266337\t125.951\n";

    #[test]
    fn synthetic_label_at_origin_and_unit_vector() {
        assert_eq!(synthetic_label(&[0.0, 0.0, 0.0, 0.0], 0.0), 210.0);
        assert!((synthetic_label(&[1.0, 0.0, 0.0, 0.0], 0.0) - 237.4).abs() < 1e-12);
    }

    #[test]
    fn synthetic_rejects_zero_counts() {
        assert!(generate_synthetic(0, 10, 10, false, 1).is_err());
        assert!(generate_synthetic(10, 0, 10, false, 1).is_err());
        assert!(generate_synthetic(10, 10, 0, true, 1).is_err());
    }

    #[test]
    fn synthetic_shift_only_when_requested() {
        let plain = generate_synthetic(5, 6, 7, false, 3).unwrap();
        assert!(plain.shifted_test.is_none());
        let shifted = generate_synthetic(5, 6, 7, true, 3).unwrap();
        assert_eq!(shifted.shifted_test.unwrap().len(), 7);
        assert_eq!(shifted.proper_train.len(), 5);
        assert_eq!(shifted.calibration.len(), 6);
    }

    #[test]
    fn shifted_synthetic_mean_matches_tilt() {
        let split = generate_synthetic(1, 1, 100_000, true, 11).unwrap();
        let shifted = split.shifted_test.unwrap();
        let n = shifted.len() as f64;
        for (j, b) in SYNTHETIC_TILT.iter().enumerate() {
            let mean = shifted.rows().map(|(x, _)| x[j]).sum::<f64>() / n;
            // 3 standard errors of a unit-variance mean over 1e5 draws
            assert!((mean - b).abs() < 3.0 / n.sqrt(), "component {j}: {mean}");
        }
        let x1_mean = shifted.rows().map(|(x, _)| x[0]).sum::<f64>() / n;
        assert!((x1_mean + 1.0).abs() < 0.02);
    }

    #[test]
    fn gaussian_tilt_equals_weighted_resampling_of_a_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pool = sample_synthetic(200_000, &[0.0; 4], &mut rng).unwrap();
        let resampled = tilt_resample(&pool, &TiltSpec::synthetic(), Some(100_000), 6).unwrap();
        let n = resampled.len() as f64;
        for (j, b) in SYNTHETIC_TILT.iter().enumerate() {
            let mean = resampled.rows().map(|(x, _)| x[j]).sum::<f64>() / n;
            assert!((mean - b).abs() < 0.03, "component {j}: {mean} vs {b}");
        }
    }

    #[test]
    fn airfoil_first_row_preprocessing() {
        let ds = parse_airfoil(FIRST_ROWS.as_bytes()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 5);
        let x = ds.x(0);
        assert!((x[0] - 800f64.ln()).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
        assert_eq!(x[2], 0.3048);
        assert_eq!(x[3], 71.3);
        assert!((x[4] - 0.00266337f64.ln()).abs() < 1e-12);
        assert_eq!(ds.y(0), 126.201);
    }

    #[test]
    fn airfoil_errors() {
        match parse_airfoil("".as_bytes()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
        match parse_airfoil("800 0 0.3 71.3 0.002\n".as_bytes()) {
            Err(Error::Format(msg)) => assert!(msg.contains("line 1")),
            other => panic!("expected format error, got {other:?}"),
        }
        let bad = format!("{FIRST_ROWS}800 0 abc 71.3 0.002 120\n");
        match parse_airfoil(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn airfoil_round_trip() {
        let ds = parse_airfoil(FIRST_ROWS.as_bytes()).unwrap();
        let mut raw = Vec::new();
        write_airfoil(&ds, &mut raw).unwrap();
        let again = parse_airfoil(raw.as_slice()).unwrap();
        for (a, b) in ds.covariates().iter().zip(again.covariates()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
        let mut csv_bytes = Vec::new();
        ds.write_csv(&mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3,x4,x5,y\n"));
        assert_eq!(Dataset::read_csv(csv_bytes.as_slice()).unwrap(), ds);
    }

    #[test]
    fn split_sizes_floor_arithmetic() {
        assert_eq!(split_sizes(1503, (0.25, 0.25, 0.5)).unwrap(), (375, 375, 753));
        assert_eq!(split_sizes(4, (0.25, 0.25, 0.5)).unwrap(), (1, 1, 2));
        assert_eq!(split_sizes(100, (0.2, 0.2, 0.2)).unwrap(), (20, 20, 20));
        assert!(split_sizes(3, (0.25, 0.25, 0.5)).is_err());
        assert!(split_sizes(100, (0.5, 0.5, 0.5)).is_err());
        assert!(split_sizes(100, (0.0, 0.5, 0.5)).is_err());
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let ys = xs.clone();
        let ds = Dataset::new(1, xs, ys).unwrap();
        let a = split_dataset(&ds, (0.25, 0.25, 0.5), 42).unwrap();
        let b = split_dataset(&ds, (0.25, 0.25, 0.5), 42).unwrap();
        assert_eq!(a.proper_train, b.proper_train);
        assert_eq!(a.calibration, b.calibration);
        assert_eq!(a.test, b.test);
        let mut all: Vec<f64> = a
            .proper_train
            .labels()
            .iter()
            .chain(a.calibration.labels())
            .chain(a.test.labels())
            .copied()
            .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..40).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn tilt_probabilities() {
        let ds = Dataset::new(1, vec![0.0, 3f64.ln()], vec![0.0, 0.0]).unwrap();
        let p = selection_probabilities(&ds, &TiltSpec::new(vec![1.0]).unwrap()).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);

        let ds = Dataset::new(2, vec![1.0, 2.0, -3.0, 4.0, 5.0, 0.5], vec![1.0, 2.0, 3.0]).unwrap();
        let p = selection_probabilities(&ds, &TiltSpec::zero(2)).unwrap();
        assert!(p.iter().all(|&v| v == 1.0 / 3.0));
    }

    #[test]
    fn tilt_guard_handles_huge_exponents() {
        let ds = Dataset::new(1, vec![1000.0, 1001.0], vec![0.0, 0.0]).unwrap();
        let p = selection_probabilities(&ds, &TiltSpec::new(vec![1.0]).unwrap()).unwrap();
        let e = std::f64::consts::E;
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn airfoil_tilt_is_nonuniform() {
        let ds = parse_airfoil(FIRST_ROWS.as_bytes()).unwrap();
        let shifted = tilt_resample(&ds, &TiltSpec::airfoil(), None, 1).unwrap();
        assert_eq!(shifted.len(), ds.len());
        let p = selection_probabilities(&ds, &TiltSpec::airfoil()).unwrap();
        assert!(p[0] > p[1] && p[1] > p[2]);
    }
}
