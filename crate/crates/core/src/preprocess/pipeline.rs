use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    detect_outliers, difference, impute_missing, log_transform, normalize, replace_outliers,
    ImputeMethod, NormalizeMethod, OutlierMethod, ReplaceStrategy, TransformRecord,
};
use crate::error::ForecastError;
use crate::timeseries::TimeSeries;

/// One preprocessing step, as accepted by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PipelineStep {
    Impute {
        method: ImputeMethod,
    },
    Outliers {
        #[serde(default)]
        detect: OutlierMethod,
        #[serde(default = "default_replace")]
        replace: ReplaceStrategy,
    },
    Log,
    Difference {
        lag: usize,
    },
    Normalize {
        method: NormalizeMethod,
    },
}

fn default_replace() -> ReplaceStrategy {
    ReplaceStrategy::Interpolate
}

/// A step together with the inversion record it produced, if it changes units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedStep {
    pub step: PipelineStep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<TransformRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("pipeline step {step}: {source}")]
pub struct PipelineError {
    pub step: usize,
    pub source: ForecastError,
}

/// Runs `steps` in order, stopping at the first failure.
pub fn apply_pipeline(
    series: &TimeSeries,
    steps: &[PipelineStep],
) -> Result<(TimeSeries, Vec<AppliedStep>), PipelineError> {
    if steps.is_empty() {
        return Err(PipelineError {
            step: 0,
            source: ForecastError::arg("pipeline has no steps"),
        });
    }
    let mut current = series.clone();
    let mut applied = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let (next, record) =
            apply_step(&current, step).map_err(|source| PipelineError { step: i, source })?;
        current = next;
        applied.push(AppliedStep {
            step: step.clone(),
            record,
        });
    }
    Ok((current, applied))
}

fn apply_step(
    series: &TimeSeries,
    step: &PipelineStep,
) -> crate::Result<(TimeSeries, Option<TransformRecord>)> {
    Ok(match *step {
        PipelineStep::Impute { method } => (impute_missing(series, method)?, None),
        PipelineStep::Outliers { detect, replace } => {
            let flagged = detect_outliers(series, detect)?;
            (replace_outliers(series, &flagged, replace)?, None)
        }
        PipelineStep::Log => {
            let (s, r) = log_transform(series)?;
            (s, Some(r))
        }
        PipelineStep::Difference { lag } => {
            let (s, r) = difference(series, lag)?;
            (s, Some(r))
        }
        PipelineStep::Normalize { method } => {
            let (s, r) = normalize(series, method)?;
            (s, Some(r))
        }
    })
}

/// Inverted forecast: points plus bounds when they survive the inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedForecast {
    pub points: Vec<f64>,
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
}

/// Maps forecast values back through every record, last step first.
///
/// Bounds are mapped pointwise through monotone inverses and dropped once a
/// differencing step has to be integrated.
pub fn invert_forecast<'a>(
    records: impl DoubleEndedIterator<Item = &'a TransformRecord>,
    points: &[f64],
    bounds: Option<(&[f64], &[f64])>,
) -> InvertedForecast {
    let mut points = points.to_vec();
    let mut bounds = bounds.map(|(l, u)| (l.to_vec(), u.to_vec()));
    for record in records.rev() {
        points = record.invert_values(&points);
        bounds = match bounds {
            Some((l, u)) if record.preserves_intervals() => {
                Some((record.invert_values(&l), record.invert_values(&u)))
            }
            _ => None,
        };
    }
    InvertedForecast { points, bounds }
}
