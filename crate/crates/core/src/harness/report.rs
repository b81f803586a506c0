use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use super::config::Method;
use crate::error::{Error, Result};
use crate::eval::{Histogram, KsResult, RankSummary};

/// Per-trial summary of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub method: Method,
    /// Fraction of the trial's test points whose interval contains the label.
    pub covered: f64,
    /// Median interval width over the trial's test points.
    pub width: f64,
    /// Mean CRPS over the trial's test points.
    pub crps: f64,
    pub effective_n: f64,
}

/// Serializes non-finite floats as the strings `inf`, `-inf` and `NaN`.
pub fn json_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

/// Summary statistics of one method across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub trials: usize,
    #[serde(serialize_with = "json_f64")]
    pub mean_coverage: f64,
    #[serde(serialize_with = "json_f64")]
    pub median_coverage: f64,
    /// Sample standard deviation of per-trial coverage (NaN for one trial).
    #[serde(serialize_with = "json_f64")]
    pub sd_coverage: f64,
    #[serde(serialize_with = "json_f64")]
    pub mean_width: f64,
    #[serde(serialize_with = "json_f64")]
    pub median_width: f64,
    #[serde(serialize_with = "json_f64")]
    pub mean_crps: f64,
    #[serde(serialize_with = "json_f64")]
    pub mean_effective_n: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median with the midpoint rule for even lengths; infinities are ordered
/// normally.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Aggregates records per method, in method order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<MethodAggregate> {
    let mut by_method: BTreeMap<Method, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(r.method).or_default().push(r);
    }
    by_method
        .into_iter()
        .map(|(method, rs)| {
            let col = |f: fn(&TrialRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let coverage = col(|r| r.covered);
            let width = col(|r| r.width);
            MethodAggregate {
                method,
                trials: rs.len(),
                mean_coverage: mean(&coverage),
                median_coverage: median(&coverage),
                sd_coverage: sample_sd(&coverage),
                mean_width: mean(&width),
                median_width: median(&width),
                mean_crps: mean(&col(|r| r.crps)),
                mean_effective_n: mean(&col(|r| r.effective_n)),
            }
        })
        .collect()
}

pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `bin_low,bin_high,count` rows.
pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> Result<()> {
    let mut text = String::from("bin_low,bin_high,count\n");
    for (b, count) in hist.counts.iter().enumerate() {
        let (lo, hi) = hist.edges(b);
        text.push_str(&format!("{lo},{hi},{count}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<MethodAggregate>,
    /// One PIT value per trial for each method, in trial order.
    pub pit: BTreeMap<Method, Vec<f64>>,
    pub ks: BTreeMap<Method, KsResult>,
    pub histograms: BTreeMap<Method, Histogram>,
    /// Friedman/Nemenyi comparison of per-trial mean CRPS, with methods in
    /// configuration order.
    pub ranks: Option<(Vec<Method>, RankSummary)>,
    /// Trials whose estimated-ratio classifier separated the two samples.
    pub separated_ratio_fits: usize,
}

impl ExperimentSummary {
    pub fn aggregate_for(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    /// Writes `records.csv`, `aggregates.json`, `pit_values.csv`,
    /// `pit_<method>.csv`, `ks.json` and (when available) `ranks.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if !self.records.is_empty() {
            write_records_csv(&dir.join("records.csv"), &self.records)?;
            write_json(&dir.join("aggregates.json"), &self.aggregates)?;
        }
        let mut pit_text = String::from("trial,method,pit\n");
        for (method, values) in &self.pit {
            for (t, v) in values.iter().enumerate() {
                pit_text.push_str(&format!("{t},{method},{v}\n"));
            }
        }
        let pit_path = dir.join("pit_values.csv");
        fs::write(&pit_path, pit_text).map_err(|e| Error::io(&pit_path, e))?;
        for (method, hist) in &self.histograms {
            write_histogram_csv(&dir.join(format!("pit_{method}.csv")), hist)?;
        }
        write_json(&dir.join("ks.json"), &self.ks)?;
        if let Some((methods, ranks)) = &self.ranks {
            #[derive(Serialize)]
            struct Ranks<'a> {
                methods: &'a [Method],
                #[serde(flatten)]
                summary: &'a RankSummary,
            }
            write_json(&dir.join("ranks.json"), &Ranks { methods, summary: ranks })?;
        }
        Ok(())
    }
}
