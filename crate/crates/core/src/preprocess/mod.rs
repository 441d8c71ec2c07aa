//! Data preparation: imputation, outlier handling, invertible transforms,
//! feature construction and a stationarity test.
//!
//! Every transform that changes units returns a [`TransformRecord`] carrying
//! the constants needed to map values (and forecasts) back.

mod adf;
mod features;
mod impute;
mod outliers;
mod pipeline;
mod transform;

pub use adf::{adf_statistic, default_adf_lag, AdfResult, ADF_CRITICAL_5PCT};
pub use features::{make_features, FeatureMatrix};
pub use impute::{impute_missing, ImputeMethod};
pub use outliers::{detect_outliers, replace_outliers, OutlierMethod, ReplaceStrategy};
pub use pipeline::{
    apply_pipeline, invert_forecast, AppliedStep, InvertedForecast, PipelineError, PipelineStep,
};
pub use transform::{
    denormalize, difference, exp_inverse, log_transform, normalize, undifference, NormalizeMethod,
    TransformRecord,
};
