use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    LinearInterpolation,
    ForwardFill,
}

/// Fills every missing value; observed values are left untouched.
pub fn impute_missing(series: &TimeSeries, method: ImputeMethod) -> Result<TimeSeries> {
    let values = series.values();
    if values.iter().all(Option::is_none) {
        return Err(ForecastError::Impute("every value is missing".into()));
    }
    let filled = match method {
        ImputeMethod::ForwardFill => {
            let mut last = values[0].ok_or_else(|| {
                ForecastError::Impute("forward fill needs the first value to be present".into())
            })?;
            values
                .iter()
                .map(|v| {
                    if let Some(v) = v {
                        last = *v;
                    }
                    last
                })
                .collect()
        }
        ImputeMethod::LinearInterpolation => {
            if values[0].is_none() || values[values.len() - 1].is_none() {
                return Err(ForecastError::Impute(
                    "linear interpolation needs the first and last values to be present".into(),
                ));
            }
            let mut out: Vec<f64> = Vec::with_capacity(values.len());
            let mut prev = 0usize;
            for (i, v) in values.iter().enumerate() {
                if let Some(v) = v {
                    let start = out.last().copied().unwrap_or(*v);
                    let gap = (i - prev) as f64;
                    for k in out.len()..i {
                        let frac = (k - prev) as f64 / gap;
                        out.push(start + (v - start) * frac);
                    }
                    out.push(*v);
                    prev = i;
                }
            }
            out
        }
    };
    Ok(series.with_complete_values(filled))
}
