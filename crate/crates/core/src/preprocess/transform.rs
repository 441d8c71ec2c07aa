use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::stats::{mean, population_std};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMethod {
    Minmax,
    Zscore,
}

/// Everything needed to undo a unit-changing transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformRecord {
    /// Natural log; inverted by `exp`.
    Log,
    /// `y_t = x_{t+lag} - x_t`.
    Difference {
        lag: usize,
        /// First timestamp of the undifferenced series.
        origin: i64,
        /// The `lag` values consumed at the start, used to rebuild the series.
        head: Vec<f64>,
        /// The last `lag` values, used to continue forecasts past the end.
        tail: Vec<f64>,
    },
    /// `y = (x - center) / scale`.
    Normalize {
        method: NormalizeMethod,
        center: f64,
        scale: f64,
    },
}

impl TransformRecord {
    /// Maps values from transformed back to original units.
    ///
    /// For differencing, `values` are read as the differenced values following
    /// the end of the fitted series (a forecast) and are integrated from the
    /// stored tail.
    pub fn invert_values(&self, values: &[f64]) -> Vec<f64> {
        match self {
            TransformRecord::Log => values.iter().map(|v| v.exp()).collect(),
            TransformRecord::Normalize { center, scale, .. } => {
                values.iter().map(|v| v * scale + center).collect()
            }
            TransformRecord::Difference { lag, tail, .. } => {
                let mut levels = tail.clone();
                for d in values {
                    let base = levels[levels.len() - lag];
                    levels.push(d + base);
                }
                levels.split_off(tail.len())
            }
        }
    }

    /// Whether interval bounds can be mapped through the inverse pointwise.
    pub fn preserves_intervals(&self) -> bool {
        !matches!(self, TransformRecord::Difference { .. })
    }
}

/// Lag-`lag` differences, stored against the later timestamp.
pub fn difference(series: &TimeSeries, lag: usize) -> Result<(TimeSeries, TransformRecord)> {
    let xs = series.complete_values()?;
    if lag == 0 {
        return Err(ForecastError::arg("difference lag must be positive"));
    }
    if lag >= xs.len() {
        return Err(ForecastError::arg(format!(
            "lag {lag} needs more than {lag} points, series has {}",
            xs.len()
        )));
    }
    let diffed: Vec<f64> = (lag..xs.len()).map(|t| xs[t] - xs[t - lag]).collect();
    let out = TimeSeries::from_parts(
        series.name(),
        series.timestamps()[lag..].to_vec(),
        diffed.into_iter().map(Some).collect(),
        series.frequency(),
    )?;
    let record = TransformRecord::Difference {
        lag,
        origin: series.first_timestamp(),
        head: xs[..lag].to_vec(),
        tail: xs[xs.len() - lag..].to_vec(),
    };
    Ok((out, record))
}

/// Rebuilds the series that `record` was taken from.
pub fn undifference(diffed: &TimeSeries, record: &TransformRecord) -> Result<TimeSeries> {
    let TransformRecord::Difference {
        lag, origin, head, ..
    } = record
    else {
        return Err(ForecastError::arg("record was not produced by difference"));
    };
    let lag = *lag;
    if head.len() != lag || diffed.first_timestamp() != origin + lag as i64 * diffed.frequency() {
        return Err(ForecastError::arg(
            "difference record does not match this series",
        ));
    }
    let ds = diffed.complete_values()?;
    let mut xs = head.clone();
    for (t, d) in ds.iter().enumerate() {
        xs.push(d + xs[t]);
    }
    TimeSeries::from_values(diffed.name(), *origin, diffed.frequency(), &xs)
}

/// Natural log of every value; all values must be positive.
pub fn log_transform(series: &TimeSeries) -> Result<(TimeSeries, TransformRecord)> {
    let xs = series.complete_values()?;
    if let Some(index) = xs.iter().position(|&x| x <= 0.0) {
        return Err(ForecastError::Domain {
            index,
            message: format!("log needs positive values, found {}", xs[index]),
        });
    }
    let out = xs.iter().map(|x| x.ln()).collect();
    Ok((series.with_complete_values(out), TransformRecord::Log))
}

pub fn exp_inverse(series: &TimeSeries) -> Result<TimeSeries> {
    let xs = series.complete_values()?;
    Ok(series.with_complete_values(TransformRecord::Log.invert_values(&xs)))
}

/// Min-max scaling to [0, 1] or z-scoring with the population std.
pub fn normalize(
    series: &TimeSeries,
    method: NormalizeMethod,
) -> Result<(TimeSeries, TransformRecord)> {
    let xs = series.complete_values()?;
    if xs.len() < 2 {
        return Err(ForecastError::TooShort {
            needed: 2,
            got: xs.len(),
        });
    }
    let (center, scale) = match method {
        NormalizeMethod::Minmax => {
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (min, max - min)
        }
        NormalizeMethod::Zscore => (mean(&xs), population_std(&xs)),
    };
    if !(scale > 0.0) {
        return Err(ForecastError::DegenerateRange(format!(
            "constant series cannot be normalized with {method:?}"
        )));
    }
    let out = xs.iter().map(|x| (x - center) / scale).collect();
    Ok((
        series.with_complete_values(out),
        TransformRecord::Normalize {
            method,
            center,
            scale,
        },
    ))
}

pub fn denormalize(series: &TimeSeries, record: &TransformRecord) -> Result<TimeSeries> {
    if !matches!(record, TransformRecord::Normalize { .. }) {
        return Err(ForecastError::arg("record was not produced by normalize"));
    }
    let xs = series.complete_values()?;
    Ok(series.with_complete_values(record.invert_values(&xs)))
}
