use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{DatasetSpec, ExperimentConfig, MeasureSpec, Method, Mode, ModelSpec};
use super::report::{median, TrialRecord};
use crate::cps::{ConformityMeasure, WeightedScores};
use crate::data::{
    generate_synthetic_with, sample_gaussian_covariates, split_dataset_with, tilt_resample_with, Dataset,
};
use crate::error::{Error, Result};
use crate::eval::crps_with_extent;
use crate::models::{fit_knn, fit_linear, DifficultyEstimator, Predictor};
use crate::weights::{effective_sample_size, estimate_ratio, LikelihoodRatioProvider};

/// Random streams used inside a trial, kept apart so that adding a method
/// does not change the data of the others.
#[derive(Clone, Copy)]
enum Purpose {
    Data = 1,
    ShiftPool = 2,
    Subsample = 3,
    Pit = 4,
}

/// Generator for one purpose of one trial: the experiment seed and purpose
/// select the key, the trial id selects the ChaCha stream.
fn trial_rng(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let key = seed ^ (purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

/// Output of a single trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    /// One record per method in configuration order; empty in PIT-only mode.
    pub records: Vec<TrialRecord>,
    /// PIT value per method, all methods sharing the test index and `tau`.
    pub pit: Vec<(Method, f64)>,
    /// Whether the estimated-ratio classifier separated the samples.
    pub ratio_separated: bool,
}

/// Test objects with their point predictions and difficulties.
struct EvalSet<'a> {
    data: &'a Dataset,
    predictions: Vec<f64>,
    sigmas: Vec<f64>,
}

impl<'a> EvalSet<'a> {
    fn new(data: &'a Dataset, model: &Predictor, measure: &ConformityMeasure, rows: &[usize]) -> Result<Self> {
        let mut predictions = vec![f64::NAN; data.len()];
        let mut sigmas = vec![f64::NAN; data.len()];
        for &i in rows {
            let x = data.x(i);
            predictions[i] = model.predict(x);
            sigmas[i] = measure.difficulty(x)?;
        }
        Ok(Self {
            data,
            predictions,
            sigmas,
        })
    }
}

struct Fitted {
    model: Predictor,
    measure: ConformityMeasure,
}

fn fit(config: &ExperimentConfig, train: &Dataset) -> Result<Fitted> {
    let fit_model = |set: &Dataset| match config.model {
        ModelSpec::Linear => fit_linear(set),
        ModelSpec::Knn { k } => fit_knn(set, k),
    };
    match config.measure {
        MeasureSpec::Signed => Ok(Fitted {
            model: fit_model(train)?,
            measure: ConformityMeasure::SignedResidual,
        }),
        MeasureSpec::Normalized { k } => {
            let half = train.len() / 2;
            let first: Vec<usize> = (0..half).collect();
            let second: Vec<usize> = (half..train.len()).collect();
            let (fit_set, held_out) = (train.subset(&first)?, train.subset(&second)?);
            let model = fit_model(&fit_set)?;
            let mut est = DifficultyEstimator::new(k, DifficultyEstimator::default_floor(train.labels()))?;
            est.fit(&model, &held_out)?;
            Ok(Fitted {
                model,
                measure: ConformityMeasure::NormalizedResidual(est),
            })
        }
    }
}

/// Interquartile range of `values`, or their spread, or 1.
fn robust_scale(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
    [at(0.75) - at(0.25), v[v.len() - 1] - v[0]]
        .into_iter()
        .find(|&s| s > 0.0)
        .unwrap_or(1.0)
}

/// Weighted scores, test-weight source and effective sample size for one method.
struct Calibrated {
    scores: WeightedScores,
    weights: LikelihoodRatioProvider,
    effective_n: f64,
}

/// Runs one trial of the experiment.
pub fn run_trial(config: &ExperimentConfig, airfoil: Option<&Dataset>, trial: u64) -> Result<TrialOutcome> {
    let seed = config.seed;
    let tilt = &config.tilt;
    let mut data_rng = trial_rng(seed, trial, Purpose::Data);
    let mut pool_rng = trial_rng(seed, trial, Purpose::ShiftPool);
    let needs_pool = config.methods.contains(&Method::WscpsEstimated);

    let (split, shifted, pool) = match &config.dataset {
        DatasetSpec::Synthetic { n_train, n_cal, n_test } => {
            let shift = (!tilt.is_zero()).then_some(tilt);
            let mut split = generate_synthetic_with(*n_train, *n_cal, *n_test, shift, &mut data_rng)?;
            let shifted = split.shifted_test.take().unwrap_or_else(|| split.test.clone());
            let pool = needs_pool.then(|| sample_gaussian_covariates(*n_cal, tilt.beta(), &mut pool_rng));
            (split, shifted, pool)
        }
        DatasetSpec::Airfoil { fractions, .. } => {
            let ds = airfoil.ok_or_else(|| Error::invalid("airfoil data not loaded"))?;
            let split = split_dataset_with(ds, *fractions, &mut data_rng)?;
            let shifted = if tilt.is_zero() {
                split.test.clone()
            } else {
                tilt_resample_with(&split.test, tilt, None, &mut data_rng)?
            };
            let pool = if needs_pool {
                let n_cal = split.calibration.len();
                Some(tilt_resample_with(&split.test, tilt, Some(n_cal), &mut pool_rng)?.covariates().to_vec())
            } else {
                None
            };
            (split, shifted, pool)
        }
    };

    let Fitted { model, measure } = fit(config, &split.proper_train)?;
    let cal = &split.calibration;
    let dim = cal.dim();
    let mut scores = Vec::with_capacity(cal.len());
    let mut residuals = Vec::with_capacity(cal.len());
    for (x, y) in cal.rows() {
        let pred = model.predict(x);
        let sigma = measure.difficulty(x)?;
        scores.push(ConformityMeasure::score_with(pred, sigma, y));
        residuals.push(y - pred);
    }
    let extent = 10.0 * robust_scale(&residuals);

    let n_test = split.test.len();
    if shifted.len() != n_test {
        return Err(Error::invalid("shifted and unshifted test sets differ in size"));
    }
    let mut pit_rng = trial_rng(seed, trial, Purpose::Pit);
    let pit_index = pit_rng.random_range(0..n_test);
    let pit_tau: f64 = pit_rng.random();

    let rows: Vec<usize> = match config.mode {
        Mode::Full => (0..n_test).collect(),
        Mode::PitOnly => vec![pit_index],
    };
    let wants = |shifted_set: bool| config.methods.iter().any(|m| m.uses_shifted_test() == shifted_set);
    let iid_set = if wants(false) {
        Some(EvalSet::new(&split.test, &model, &measure, &rows)?)
    } else {
        None
    };
    let shift_set = if wants(true) {
        Some(EvalSet::new(&shifted, &model, &measure, &rows)?)
    } else {
        None
    };

    let oracle = LikelihoodRatioProvider::Oracle(tilt.clone());
    let mut ratio_separated = false;
    let mut records = Vec::new();
    let mut pit = Vec::new();
    for &method in &config.methods {
        let calibrated = match method {
            Method::ScpsIid | Method::ScpsShift => Calibrated {
                scores: WeightedScores::unweighted(&scores)?,
                weights: LikelihoodRatioProvider::Unit,
                effective_n: scores.len() as f64,
            },
            Method::WscpsOracle => {
                let w = oracle.ratios(cal.covariates(), dim);
                Calibrated {
                    scores: WeightedScores::new(&scores, &w)?,
                    effective_n: effective_sample_size(&w)?,
                    weights: oracle.clone(),
                }
            }
            Method::WscpsEstimated => {
                let target = pool.as_deref().ok_or_else(|| Error::invalid("missing shifted pool"))?;
                let provider = estimate_ratio(cal.covariates(), target, dim)?;
                if let LikelihoodRatioProvider::Estimated(fit) = &provider {
                    ratio_separated |= fit.diagnostics().separated;
                }
                let w = provider.ratios(cal.covariates(), dim);
                Calibrated {
                    scores: WeightedScores::new(&scores, &w)?,
                    effective_n: effective_sample_size(&w)?,
                    weights: provider,
                }
            }
            Method::ScpsReduced => {
                let w = oracle.ratios(cal.covariates(), dim);
                let ess = effective_sample_size(&w)?;
                let m = (ess.round() as usize).clamp(1, scores.len());
                let mut sub_rng = trial_rng(seed, trial, Purpose::Subsample);
                let mut picks = index::sample(&mut sub_rng, scores.len(), m).into_vec();
                picks.sort_unstable();
                let sub: Vec<f64> = picks.iter().map(|&i| scores[i]).collect();
                Calibrated {
                    scores: WeightedScores::unweighted(&sub)?,
                    weights: LikelihoodRatioProvider::Unit,
                    effective_n: m as f64,
                }
            }
        };
        let set = if method.uses_shifted_test() {
            shift_set.as_ref()
        } else {
            iid_set.as_ref()
        }
        .expect("evaluation set prepared for every selected method");

        let distribution_at = |i: usize| {
            let x = set.data.x(i);
            calibrated
                .scores
                .distribution(set.predictions[i], set.sigmas[i], calibrated.weights.ratio(x))
        };

        let pit_dist = distribution_at(pit_index)?;
        pit.push((method, pit_dist.cdf(set.data.y(pit_index), pit_tau)?));

        if config.mode == Mode::Full {
            let mut hits = 0usize;
            let mut widths = Vec::with_capacity(n_test);
            let mut crps_sum = 0.0;
            for &i in &rows {
                let dist = distribution_at(i)?;
                let y = set.data.y(i);
                let interval = dist.interval(config.coverage, config.tau)?;
                hits += usize::from(interval.contains(y));
                widths.push(interval.width());
                crps_sum += crps_with_extent(&dist, y, config.tau, extent)?.value;
            }
            records.push(TrialRecord {
                trial,
                method,
                covered: hits as f64 / rows.len() as f64,
                width: median(&widths),
                crps: crps_sum / rows.len() as f64,
                effective_n: calibrated.effective_n,
            });
        }
    }
    Ok(TrialOutcome {
        trial,
        records,
        pit,
        ratio_separated,
    })
}
