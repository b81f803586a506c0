//! Scoring rules and calibration diagnostics: CRPS, interval coverage, PIT
//! uniformity and rank-based comparison of methods.

mod calibration;
mod crps;
mod ranking;

pub use calibration::{coverage, ks_coefficient, ks_uniformity, pit_histogram, Histogram, KsResult};
pub use crps::{crps, crps_with_extent, default_extent, CrpsValue};
pub use ranking::{friedman_nemenyi, midranks, nemenyi_q, studentized_range_cdf, RankSummary};
