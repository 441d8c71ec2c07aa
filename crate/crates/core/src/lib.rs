//! Hybrid univariate forecasting: ARIMA/SARIMA fitted by conditional sum of
//! squares, Holt-Winters exponential smoothing, and a from-scratch LSTM,
//! compared under one set of metrics and rolling-origin cross-validation.
//!
//! The typical flow is ingest → [`preprocess`] → fit a [`model::ModelSpec`] →
//! forecast, with [`evaluate`] providing metrics, leaderboards and anomaly
//! detection on top.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod arima;
pub mod error;
pub mod ets;
pub mod evaluate;
pub mod lstm;
pub mod model;
pub mod optim;
pub mod preprocess;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub use error::{ForecastError, Result};
pub use model::{FittedModel, Forecast, ForecastStep, ModelSpec};
pub use timeseries::{Horizon, SplitSpec, TimeSeries};
