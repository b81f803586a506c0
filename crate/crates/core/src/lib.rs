//! Weighted split conformal predictive systems (WSCPS).
//!
//! A split conformal predictive system turns the calibration residuals of an
//! arbitrary point predictor into a full predictive distribution for a new
//! label. When the test covariates follow a different law than the training
//! covariates (covariate shift) but the conditional law of the label is
//! unchanged, reweighting the calibration scores by the likelihood ratio
//! `w(x) = dP_test(x) / dP_train(x)` restores probabilistic calibration.
//!
//! Module map:
//!
//! - [`data`]: synthetic generator, airfoil loader, splitting and exponential tilting
//! - [`models`]: least-squares and k-NN point predictors, residual difficulty estimator
//! - [`weights`]: likelihood ratios (oracle or logistic estimate), normalization, effective sample size
//! - [`cps`]: conformity measures, calibration and the (weighted) split conformal transducer
//! - [`eval`]: CRPS, interval coverage, PIT/KS uniformity, Friedman-Nemenyi ranking
//! - [`harness`]: seeded multi-trial experiments and their report files

pub mod cps;
pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod models;
pub mod weights;

pub use error::{Error, Result};
