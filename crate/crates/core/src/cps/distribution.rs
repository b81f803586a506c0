use std::io::{BufRead, Write};

use rand::Rng;
use serde::Serialize;

use super::TIE_TOLERANCE;
use crate::error::{Error, Result};

/// Step predictive distribution: atoms `(c_i, p_i)` sorted by value plus a
/// tail mass standing for the test point's own mass at `+inf`.
///
/// The fuzzy distribution function at `(y, tau)` is
/// `sum_{c_i < y} p_i + tau * (sum_{c_i = y} p_i + tail)`, where equality of
/// values means agreement within [`TIE_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    values: Vec<f64>,
    masses: Vec<f64>,
    /// `cumulative[k] = masses[0] + ... + masses[k]`
    cumulative: Vec<f64>,
    tail_mass: f64,
    point_prediction: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")))
    }
}

impl PredictiveDistribution {
    /// Sorts the atoms, merges values that agree within the tie tolerance and
    /// checks that atom masses plus the tail sum to one.
    ///
    /// The stored tail is the exact complement of the accumulated atom mass,
    /// so the distribution function reaches 1 exactly above the last atom.
    pub fn new(mut atoms: Vec<(f64, f64)>, tail_mass: f64, point_prediction: f64) -> Result<Self> {
        for &(v, p) in &atoms {
            if !v.is_finite() {
                return Err(Error::invalid(format!("atom value {v} is not finite")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::invalid(format!("atom mass {p} is not a probability")));
            }
        }
        if !(tail_mass.is_finite() && tail_mass >= 0.0) {
            return Err(Error::invalid(format!("tail mass {tail_mass} is not a probability")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted(atoms.into_iter(), tail_mass, point_prediction)
    }

    /// Same as [`Self::new`] for atoms already sorted by value.
    pub(crate) fn from_sorted(
        atoms: impl Iterator<Item = (f64, f64)>,
        tail_mass: f64,
        point_prediction: f64,
    ) -> Result<Self> {
        let (lower, _) = atoms.size_hint();
        let mut values: Vec<f64> = Vec::with_capacity(lower);
        let mut masses: Vec<f64> = Vec::with_capacity(lower);
        let mut group_start = f64::NEG_INFINITY;
        for (v, p) in atoms {
            match masses.last_mut() {
                Some(m) if v - group_start <= TIE_TOLERANCE => *m += p,
                _ => {
                    group_start = v;
                    values.push(v);
                    masses.push(p);
                }
            }
        }
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        if (acc + tail_mass - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "atom masses ({acc}) and tail mass ({tail_mass}) do not sum to one"
            )));
        }
        Ok(Self {
            values,
            masses,
            cumulative,
            tail_mass: (1.0 - acc).max(0.0),
            point_prediction,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Running sums of the atom masses.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn point_prediction(&self) -> f64 {
        self.point_prediction
    }

    /// Total atom mass at values strictly below `y` (beyond the tie tolerance).
    fn mass_below(&self, y: f64) -> (usize, f64) {
        let lo = self.values.partition_point(|&c| c < y - TIE_TOLERANCE);
        (lo, if lo == 0 { 0.0 } else { self.cumulative[lo - 1] })
    }

    /// Fuzzy distribution function `Q(y, tau)`.
    pub fn cdf(&self, y: f64, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if y.is_nan() {
            return Err(Error::invalid("cdf evaluated at NaN"));
        }
        let (lo, below) = self.mass_below(y);
        let hi = lo + self.values[lo..].partition_point(|&c| c <= y + TIE_TOLERANCE);
        // tau = 0 and tau = 1 envelopes, both read off the prefix sums
        let below = below.min(1.0);
        let upper = if hi == self.len() {
            1.0
        } else {
            let at_or_below = if hi == 0 { 0.0 } else { self.cumulative[hi - 1] };
            (at_or_below + self.tail_mass).clamp(below, 1.0)
        };
        Ok(if tau == 0.0 {
            below
        } else if tau == 1.0 {
            upper
        } else {
            (below + tau * (upper - below)).clamp(below, upper)
        })
    }

    /// Smallest atom value `c` whose upper-side mass
    /// `sum_{c_i <= c} p_i + tau * tail` reaches `q`.
    ///
    /// Returns `-inf` when `q` is already exceeded below the first atom
    /// (`q < tau * tail`) and `+inf` when no atom reaches `q`.
    pub fn quantile(&self, q: f64, tau: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {q}")));
        }
        check_tau(tau)?;
        let base = tau * self.tail_mass;
        if q < base {
            return Ok(f64::NEG_INFINITY);
        }
        let k = self.cumulative.partition_point(|&c| c + base < q);
        Ok(self.values.get(k).copied().unwrap_or(f64::INFINITY))
    }

    /// Central interval between the `(1 - coverage) / 2` and
    /// `1 - (1 - coverage) / 2` quantiles.
    pub fn interval(&self, coverage: f64, tau: f64) -> Result<PredictionInterval> {
        if !(coverage > 0.0 && coverage < 1.0) {
            return Err(Error::invalid(format!("coverage must lie in (0, 1), got {coverage}")));
        }
        let alpha = (1.0 - coverage) / 2.0;
        Ok(PredictionInterval {
            lower: self.quantile(alpha, tau)?,
            upper: self.quantile(1.0 - alpha, tau)?,
            nominal_coverage: coverage,
        })
    }

    /// Randomized PIT value: `Q(y_true, tau)` with `tau ~ Uniform(0, 1)` drawn from `rng`.
    pub fn pit_value<R: Rng + ?Sized>(&self, y_true: f64, rng: &mut R) -> Result<f64> {
        let tau: f64 = rng.random();
        self.cdf(y_true, tau)
    }

    /// Writes a `# tail_mass=...,point_prediction=...` line followed by a
    /// `value,mass` CSV table.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let io = |e| Error::io("<distribution>", e);
        writeln!(
            writer,
            "# tail_mass={},point_prediction={}",
            self.tail_mass, self.point_prediction
        )
        .map_err(io)?;
        writeln!(writer, "value,mass").map_err(io)?;
        for (v, p) in self.atoms() {
            writeln!(writer, "{v},{p}").map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let parse = |line: usize, s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid number {s:?}"),
            })
        };
        let (_, header) = lines.next().ok_or(Error::Format("empty distribution file".into()))?;
        let header = header.map_err(|e| Error::io("<distribution>", e))?;
        let meta = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::Format("missing tail-mass header line".into()))?;
        let mut tail = None;
        let mut point = None;
        for kv in meta.split(',') {
            match kv.split_once('=') {
                Some(("tail_mass", v)) => tail = Some(parse(1, v)?),
                Some(("point_prediction", v)) => point = Some(parse(1, v)?),
                _ => return Err(Error::Format(format!("unexpected header entry {kv:?}"))),
            }
        }
        let (tail, point) = tail
            .zip(point)
            .ok_or_else(|| Error::Format("header needs tail_mass and point_prediction".into()))?;
        let mut atoms = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io("<distribution>", e))?;
            if idx == 1 || line.trim().is_empty() {
                continue;
            }
            let (v, p) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected value,mass".into(),
            })?;
            atoms.push((parse(idx + 1, v)?, parse(idx + 1, p)?));
        }
        Self::new(atoms, tail, point)
    }
}

/// Prediction interval whose bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub nominal_coverage: f64,
}

impl PredictionInterval {
    /// Closed-interval membership; infinite bounds cover their side.
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}
