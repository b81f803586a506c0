use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::TiltSpec;
use crate::error::{Error, Result};

/// Conformal predictive system variants compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Unweighted, evaluated on the unshifted test set.
    #[serde(rename = "scps-iid")]
    ScpsIid,
    /// Unweighted, evaluated on the shifted test set.
    #[serde(rename = "scps-shift")]
    ScpsShift,
    /// Weighted with the true likelihood ratio, evaluated on the shifted test set.
    #[serde(rename = "wscps-oracle")]
    WscpsOracle,
    /// Weighted with a classifier-estimated likelihood ratio, evaluated on the shifted test set.
    #[serde(rename = "wscps-estimated")]
    WscpsEstimated,
    /// Unweighted on a calibration subsample of size equal to the oracle
    /// weights' effective sample size, evaluated on the unshifted test set.
    #[serde(rename = "scps-reduced")]
    ScpsReduced,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::ScpsIid,
        Method::ScpsShift,
        Method::WscpsOracle,
        Method::WscpsEstimated,
        Method::ScpsReduced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ScpsIid => "scps-iid",
            Method::ScpsShift => "scps-shift",
            Method::WscpsOracle => "wscps-oracle",
            Method::WscpsEstimated => "wscps-estimated",
            Method::ScpsReduced => "scps-reduced",
        }
    }

    /// Whether the method is scored on the shifted test set.
    pub fn uses_shifted_test(self) -> bool {
        matches!(self, Method::ScpsShift | Method::WscpsOracle | Method::WscpsEstimated)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Parses a comma-separated method list, rejecting duplicates.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if methods.contains(&m) {
            return Err(Error::invalid(format!("method {m} listed twice")));
        }
        methods.push(m);
    }
    if methods.is_empty() {
        return Err(Error::invalid("no methods given"));
    }
    Ok(methods)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Gaussian covariates with a linear label; shifted covariates are drawn
    /// from the tilted law `N(beta, I)`.
    Synthetic { n_train: usize, n_cal: usize, n_test: usize },
    /// Airfoil self-noise file split at random each trial; the shifted test
    /// set is a tilt-weighted resample of the test block.
    Airfoil { path: PathBuf, fractions: (f64, f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Linear,
    Knn { k: usize },
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// `linear` or `knn:K`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(ModelSpec::Linear),
            other => match other.strip_prefix("knn:") {
                Some(k) => Ok(ModelSpec::Knn {
                    k: parse_value("model", k)?,
                }),
                None => Err(Error::invalid(format!("unknown model {s:?}; expected linear or knn:K"))),
            },
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Linear => f.write_str("linear"),
            ModelSpec::Knn { k } => write!(f, "knn:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureSpec {
    Signed,
    /// Residual divided by a k-NN estimate of its absolute size, fitted on a
    /// held-out half of the proper training set.
    Normalized { k: usize },
}

impl FromStr for MeasureSpec {
    type Err = Error;

    /// `signed` or `normalized:K`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "signed" => Ok(MeasureSpec::Signed),
            other => match other.strip_prefix("normalized:") {
                Some(k) => Ok(MeasureSpec::Normalized {
                    k: parse_value("measure", k)?,
                }),
                None => Err(Error::invalid(format!(
                    "unknown measure {s:?}; expected signed or normalized:K"
                ))),
            },
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Signed => f.write_str("signed"),
            MeasureSpec::Normalized { k } => write!(f, "normalized:{k}"),
        }
    }
}

/// What each trial computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Coverage, width, CRPS for every test point plus one PIT value.
    Full,
    /// Only the per-trial PIT value.
    PitOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub trials: u64,
    pub coverage: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub tilt: TiltSpec,
    /// Tie-breaking value used for intervals and CRPS.
    pub tau: f64,
    pub model: ModelSpec,
    pub measure: MeasureSpec,
    pub mode: Mode,
    pub pit_bins: usize,
    pub ks_alpha: f64,
    pub rank_alpha: f64,
    pub out_dir: Option<PathBuf>,
}

pub const DEFAULT_KNN_K: usize = 25;

impl ExperimentConfig {
    pub fn synthetic() -> Self {
        Self {
            dataset: DatasetSpec::Synthetic {
                n_train: 1000,
                n_cal: 1000,
                n_test: 1000,
            },
            trials: 1000,
            coverage: 0.8,
            methods: Method::ALL.to_vec(),
            seed: 0,
            tilt: TiltSpec::synthetic(),
            tau: 0.5,
            model: ModelSpec::Knn { k: DEFAULT_KNN_K },
            measure: MeasureSpec::Signed,
            mode: Mode::Full,
            pit_bins: 10,
            ks_alpha: 0.01,
            rank_alpha: 0.05,
            out_dir: None,
        }
    }

    pub fn airfoil(path: impl Into<PathBuf>) -> Self {
        Self {
            dataset: DatasetSpec::Airfoil {
                path: path.into(),
                fractions: (0.25, 0.25, 0.5),
            },
            tilt: TiltSpec::airfoil(),
            ..Self::synthetic()
        }
    }

    pub fn covariate_dim(&self) -> usize {
        match self.dataset {
            DatasetSpec::Synthetic { .. } => 4,
            DatasetSpec::Airfoil { .. } => 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return Err(Error::invalid(format!("coverage must lie in (0, 1), got {}", self.coverage)));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        if self.tilt.dim() != self.covariate_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.covariate_dim(),
                got: self.tilt.dim(),
            });
        }
        if self.pit_bins == 0 {
            return Err(Error::invalid("pit_bins must be positive"));
        }
        for (name, a) in [("ks_alpha", self.ks_alpha), ("rank_alpha", self.rank_alpha)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {a}")));
            }
        }
        match &self.dataset {
            DatasetSpec::Synthetic { n_train, n_cal, n_test } => {
                if *n_cal == 0 || *n_test == 0 || *n_train == 0 {
                    return Err(Error::invalid("synthetic set sizes must be positive"));
                }
            }
            DatasetSpec::Airfoil { fractions: (a, b, c), .. } => {
                if [a, b, c].iter().any(|f| !(**f > 0.0)) || a + b + c > 1.0 + 1e-9 {
                    return Err(Error::invalid("split fractions must be positive and sum to at most one"));
                }
            }
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "trials" => self.trials = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "coverage" => self.coverage = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "methods" => self.methods = parse_methods(value)?,
            "model" => self.model = value.parse()?,
            "measure" => self.measure = value.parse()?,
            "beta" => self.tilt = TiltSpec::new(parse_list(key, value)?)?,
            "pit_bins" => self.pit_bins = parse_value(key, value)?,
            "ks_alpha" => self.ks_alpha = parse_value(key, value)?,
            "rank_alpha" => self.rank_alpha = parse_value(key, value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "mode" => {
                self.mode = match value {
                    "full" => Mode::Full,
                    "pit" => Mode::PitOnly,
                    _ => return Err(Error::invalid(format!("mode must be full or pit, got {value:?}"))),
                }
            }
            "n_train" | "n_cal" | "n_test" => {
                let DatasetSpec::Synthetic { n_train, n_cal, n_test } = &mut self.dataset else {
                    return Err(Error::invalid(format!("{key} only applies to the synthetic dataset")));
                };
                let slot = match key.trim() {
                    "n_train" => n_train,
                    "n_cal" => n_cal,
                    _ => n_test,
                };
                *slot = parse_value(key, value)?;
            }
            "data_path" | "fractions" => {
                let DatasetSpec::Airfoil { path, fractions } = &mut self.dataset else {
                    return Err(Error::invalid(format!("{key} only applies to the airfoil dataset")));
                };
                if key.trim() == "data_path" {
                    *path = PathBuf::from(value);
                } else {
                    match parse_list(key, value)?.as_slice() {
                        &[a, b, c] => *fractions = (a, b, c),
                        _ => return Err(Error::invalid("fractions needs three values")),
                    }
                }
            }
            other => return Err(Error::invalid(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a file of `key=value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("invalid value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_value(key, v)).collect()
}
