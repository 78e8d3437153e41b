//! Multi-horizon solar irradiance forecasting.
//!
//! The crate covers the whole pipeline: synthetic or CSV-backed hourly
//! datasets, min-max scaling and windowing, a from-scratch LSTM with
//! clear-sky output injection, point / quantile / parametric heads, the
//! matching training losses, reference baselines, and calibration metrics.

// Validation written as `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod losses;
pub mod metrics;
pub mod nn;

pub use error::{Error, Result};

/// Forecast horizon used throughout, in hours.
pub const HORIZON: usize = 36;
