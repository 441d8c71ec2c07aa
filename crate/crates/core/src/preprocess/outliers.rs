use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::stats::{mean, population_std, quantile_sorted, sorted_copy};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OutlierMethod {
    /// Flags `|x - mean| > threshold * std` (population std).
    Zscore { threshold: f64 },
    /// Flags values outside `[Q1 - m*IQR, Q3 + m*IQR]`.
    Iqr { multiplier: f64 },
}

impl OutlierMethod {
    pub fn zscore() -> Self {
        OutlierMethod::Zscore { threshold: 3.0 }
    }

    pub fn iqr() -> Self {
        OutlierMethod::Iqr { multiplier: 1.5 }
    }

    fn validate(&self) -> Result<()> {
        let k = match *self {
            OutlierMethod::Zscore { threshold } => threshold,
            OutlierMethod::Iqr { multiplier } => multiplier,
        };
        if !(k.is_finite() && k >= 0.0) {
            return Err(ForecastError::arg(format!(
                "outlier cutoff {k} must be finite and nonnegative"
            )));
        }
        Ok(())
    }

    /// Acceptance band computed from `xs`. `None` when the spread is zero under zscore.
    fn bounds(&self, xs: &[f64]) -> Option<(f64, f64)> {
        match *self {
            OutlierMethod::Zscore { threshold } => {
                let std = population_std(xs);
                if std == 0.0 {
                    return None;
                }
                let m = mean(xs);
                Some((m - threshold * std, m + threshold * std))
            }
            OutlierMethod::Iqr { multiplier } => {
                let sorted = sorted_copy(xs);
                let q1 = quantile_sorted(&sorted, 0.25);
                let q3 = quantile_sorted(&sorted, 0.75);
                let iqr = q3 - q1;
                Some((q1 - multiplier * iqr, q3 + multiplier * iqr))
            }
        }
    }
}

impl Default for OutlierMethod {
    fn default() -> Self {
        Self::zscore()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ReplaceStrategy {
    /// Linear interpolation between the nearest unflagged neighbours.
    Interpolate,
    /// Clamp to the band computed from the unflagged points.
    ClipToBound { bound: OutlierMethod },
}

/// Indices (ascending) of values outside the method's acceptance band.
pub fn detect_outliers(series: &TimeSeries, method: OutlierMethod) -> Result<Vec<usize>> {
    method.validate()?;
    let xs = series.complete_values()?;
    if xs.len() < 4 {
        return Err(ForecastError::TooShort {
            needed: 4,
            got: xs.len(),
        });
    }
    let Some((lo, hi)) = method.bounds(&xs) else {
        return Ok(Vec::new());
    };
    Ok(xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| x < lo || x > hi)
        .map(|(i, _)| i)
        .collect())
}

/// Replaces the flagged positions; every other value is copied unchanged.
pub fn replace_outliers(
    series: &TimeSeries,
    indices: &[usize],
    strategy: ReplaceStrategy,
) -> Result<TimeSeries> {
    let xs = series.complete_values()?;
    let flagged: BTreeSet<usize> = indices.iter().copied().collect();
    if let Some(&bad) = flagged.iter().find(|&&i| i >= xs.len()) {
        return Err(ForecastError::arg(format!(
            "outlier index {bad} out of range for a series of length {}",
            xs.len()
        )));
    }
    if flagged.is_empty() {
        return Ok(series.clone());
    }
    if flagged.len() == xs.len() {
        return Err(ForecastError::arg(
            "every point is flagged; nothing to replace from",
        ));
    }
    let kept: Vec<f64> = xs
        .iter()
        .enumerate()
        .filter(|(i, _)| !flagged.contains(i))
        .map(|(_, &x)| x)
        .collect();

    let mut out = xs.clone();
    match strategy {
        ReplaceStrategy::Interpolate => {
            for &i in &flagged {
                let before = (0..i).rev().find(|j| !flagged.contains(j));
                let after = (i + 1..xs.len()).find(|j| !flagged.contains(j));
                out[i] = match (before, after) {
                    (Some(b), Some(a)) => {
                        let frac = (i - b) as f64 / (a - b) as f64;
                        xs[b] + (xs[a] - xs[b]) * frac
                    }
                    (Some(b), None) => xs[b],
                    (None, Some(a)) => xs[a],
                    (None, None) => unreachable!("at least one point is unflagged"),
                };
            }
        }
        ReplaceStrategy::ClipToBound { bound } => {
            bound.validate()?;
            let (lo, hi) = bound.bounds(&kept).unwrap_or_else(|| {
                let m = mean(&kept);
                (m, m)
            });
            for &i in &flagged {
                out[i] = xs[i].clamp(lo, hi);
            }
        }
    }
    Ok(series.with_complete_values(out))
}
