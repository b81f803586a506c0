//! Repeated-trial experiments comparing weighted and unweighted conformal
//! predictive systems under covariate shift.
//!
//! Every trial draws (or re-splits) the data, fits the point predictor,
//! calibrates, and scores each method's predictive distributions on its test
//! set. Trials run in parallel and are seeded independently, so results do
//! not depend on the number of threads.

mod config;
mod report;
mod trial;

pub use config::{
    parse_methods, DatasetSpec, ExperimentConfig, MeasureSpec, Method, Mode, ModelSpec, DEFAULT_KNN_K,
};
pub use report::{
    aggregate, json_f64, mean, median, read_records_csv, sample_sd, write_histogram_csv, write_json,
    write_records_csv, ExperimentSummary, MethodAggregate, TrialRecord,
};
pub use trial::{run_trial, TrialOutcome};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::data::load_airfoil;
use crate::error::{Error, Result};
use crate::eval::{friedman_nemenyi, ks_uniformity, pit_histogram};

/// Runs all trials and computes aggregates, PIT diagnostics and rankings.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let airfoil = match &config.dataset {
        DatasetSpec::Airfoil { path, .. } => Some(load_airfoil(path)?),
        DatasetSpec::Synthetic { .. } => None,
    };
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(config, airfoil.as_ref(), t).map_err(|e| Error::Trial {
                trial_id: t,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    summarize(config, outcomes)
}

fn summarize(config: &ExperimentConfig, outcomes: Vec<TrialOutcome>) -> Result<ExperimentSummary> {
    let separated_ratio_fits = outcomes.iter().filter(|o| o.ratio_separated).count();
    let mut pit: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    let mut records = Vec::new();
    for o in outcomes {
        for (m, v) in o.pit {
            pit.entry(m).or_default().push(v);
        }
        records.extend(o.records);
    }
    let mut ks = BTreeMap::new();
    let mut histograms = BTreeMap::new();
    for (&m, values) in &pit {
        ks.insert(m, ks_uniformity(values, config.ks_alpha)?);
        histograms.insert(m, pit_histogram(values, config.pit_bins)?);
    }
    let ranks = if config.mode == Mode::Full && config.methods.len() >= 2 && config.trials >= 2 {
        let k = config.methods.len();
        let rows: Vec<Vec<f64>> = records.chunks(k).map(|c| c.iter().map(|r| r.crps).collect()).collect();
        Some((config.methods.clone(), friedman_nemenyi(&rows, config.rank_alpha)?))
    } else {
        None
    };
    Ok(ExperimentSummary {
        aggregates: aggregate(&records),
        records,
        pit,
        ks,
        histograms,
        ranks,
        separated_ratio_fits,
    })
}
