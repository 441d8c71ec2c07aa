use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::timeseries::TimeSeries;

/// Supervised view of a series: past-only features per time index, target = value at that index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    /// `lag_k` and `rollmean_w` column names, in the order given.
    pub columns: Vec<String>,
    /// Time index of each row in the source series.
    pub indices: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Lagged values (`lag_k` = x[t-k]) and trailing means (`rollmean_w` = mean of x[t-w..t]).
///
/// Rows whose features would reach before the start of the series are dropped.
pub fn make_features(
    series: &TimeSeries,
    lags: &[usize],
    rolling_windows: &[usize],
) -> Result<FeatureMatrix> {
    if lags.is_empty() && rolling_windows.is_empty() {
        return Err(ForecastError::arg(
            "at least one lag or rolling window is required",
        ));
    }
    if lags.iter().chain(rolling_windows).any(|&k| k == 0) {
        return Err(ForecastError::arg("lags and windows must be positive"));
    }
    let xs = series.complete_values()?;
    let reach = lags
        .iter()
        .chain(rolling_windows)
        .copied()
        .max()
        .unwrap_or(0);
    if reach >= xs.len() {
        return Err(ForecastError::arg(format!(
            "largest lag/window {reach} must be below the series length {}",
            xs.len()
        )));
    }

    let columns = lags
        .iter()
        .map(|k| format!("lag_{k}"))
        .chain(rolling_windows.iter().map(|w| format!("rollmean_{w}")))
        .collect();
    let mut indices = Vec::new();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for t in reach..xs.len() {
        let mut row: Vec<f64> = lags.iter().map(|&k| xs[t - k]).collect();
        row.extend(
            rolling_windows
                .iter()
                .map(|&w| xs[t - w..t].iter().sum::<f64>() / w as f64),
        );
        indices.push(t);
        rows.push(row);
        targets.push(xs[t]);
    }
    Ok(FeatureMatrix {
        columns,
        indices,
        rows,
        targets,
    })
}
