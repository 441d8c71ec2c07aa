//! Canonical univariate time-series model, CSV ingestion and chronological splits.
//!
//! Timestamps are UTC epoch seconds. After ingestion a series always sits on a
//! regular grid: gaps in the source file become explicit missing values, which
//! must be imputed (see [`crate::preprocess::impute_missing`]) before fitting.

use std::collections::HashMap;
use std::io::Read;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};

/// Upper bound on the number of grid slots ingestion will materialize.
const MAX_GRID_LEN: usize = 10_000_000;

/// Uniformly spaced univariate observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    timestamps: Vec<i64>,
    values: Vec<Option<f64>>,
    frequency: i64,
}

impl TimeSeries {
    /// Builds a regular series starting at `start` with spacing `frequency` seconds.
    pub fn regular(
        name: impl Into<String>,
        start: i64,
        frequency: i64,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if frequency <= 0 {
            return Err(ForecastError::arg("frequency must be positive"));
        }
        if values.is_empty() {
            return Err(ForecastError::TooShort { needed: 1, got: 0 });
        }
        let timestamps = (0..values.len() as i64)
            .map(|i| start + i * frequency)
            .collect();
        Ok(Self {
            name: name.into(),
            timestamps,
            values,
            frequency,
        })
    }

    /// Regular series with no missing values.
    pub fn from_values(
        name: impl Into<String>,
        start: i64,
        frequency: i64,
        values: &[f64],
    ) -> Result<Self> {
        Self::regular(
            name,
            start,
            frequency,
            values.iter().copied().map(Some).collect(),
        )
    }

    /// Builds a series from explicit timestamps, checking every invariant.
    pub fn from_parts(
        name: impl Into<String>,
        timestamps: Vec<i64>,
        values: Vec<Option<f64>>,
        frequency: i64,
    ) -> Result<Self> {
        if timestamps.is_empty() {
            return Err(ForecastError::TooShort { needed: 1, got: 0 });
        }
        if timestamps.len() != values.len() {
            return Err(ForecastError::arg(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if frequency <= 0 {
            return Err(ForecastError::arg("frequency must be positive"));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[1] - w[0] != frequency) {
            return Err(ForecastError::IrregularSeries(format!(
                "spacing {} between {} and {} differs from frequency {frequency}",
                w[1] - w[0],
                w[0],
                w[1]
            )));
        }
        Ok(Self {
            name: name.into(),
            timestamps,
            values,
            frequency,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Spacing between consecutive observations, in seconds.
    pub fn frequency(&self) -> i64 {
        self.frequency
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_timestamp(&self) -> i64 {
        self.timestamps[0]
    }

    pub fn last_timestamp(&self) -> i64 {
        *self.timestamps.last().expect("series is never empty")
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// The values as plain reals, failing if any are missing.
    pub fn complete_values(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    ForecastError::Data(format!(
                        "missing value at index {i}; impute before this step"
                    ))
                })
            })
            .collect()
    }

    /// Same grid and name, new values.
    pub fn with_values(&self, values: Vec<Option<f64>>) -> Result<Self> {
        Self::from_parts(
            self.name.clone(),
            self.timestamps.clone(),
            values,
            self.frequency,
        )
    }

    pub(crate) fn with_complete_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.len());
        Self {
            name: self.name.clone(),
            timestamps: self.timestamps.clone(),
            values: values.into_iter().map(Some).collect(),
            frequency: self.frequency,
        }
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(ForecastError::arg(format!(
                "invalid slice {start}..{end} of a series of length {}",
                self.len()
            )));
        }
        Ok(Self {
            name: self.name.clone(),
            timestamps: self.timestamps[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
            frequency: self.frequency,
        })
    }

    /// Timestamps for `steps` periods after the last observation.
    pub fn future_timestamps(&self, steps: usize) -> Vec<i64> {
        let last = self.last_timestamp();
        (1..=steps as i64)
            .map(|h| last + h * self.frequency)
            .collect()
    }

    /// Canonical CSV export: `timestamp,value`, ISO-8601 UTC timestamps, missing as empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp,value\n");
        for (t, v) in self.timestamps.iter().zip(&self.values) {
            out.push_str(&format_timestamp(*t));
            out.push(',');
            if let Some(v) = v {
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Appends the observations of `other`, which must continue this grid.
    pub fn concat(&self, other: &TimeSeries) -> Result<Self> {
        let mut timestamps = self.timestamps.clone();
        timestamps.extend_from_slice(&other.timestamps);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::from_parts(self.name.clone(), timestamps, values, self.frequency)
    }
}

/// Fraction of a series used for training and validation; the rest is test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, validation_fraction: f64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(ForecastError::Split(format!(
                "train fraction {train_fraction} must lie in (0, 1)"
            )));
        }
        if !(0.0..1.0).contains(&validation_fraction) {
            return Err(ForecastError::Split(format!(
                "validation fraction {validation_fraction} must lie in [0, 1)"
            )));
        }
        if train_fraction + validation_fraction >= 1.0 {
            return Err(ForecastError::Split(
                "train and validation fractions must sum to less than 1".into(),
            ));
        }
        Ok(Self {
            train_fraction,
            validation_fraction,
        })
    }

    /// Segment lengths for a series of `n` points: floor, floor, remainder.
    pub fn lengths(&self, n: usize) -> (usize, usize, usize) {
        let train = (n as f64 * self.train_fraction).floor() as usize;
        let validation = (n as f64 * self.validation_fraction).floor() as usize;
        (train, validation, n - train - validation)
    }
}

/// Number of future periods to forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Horizon(usize);

impl Horizon {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(ForecastError::arg("horizon must be at least 1 step"));
        }
        Ok(Self(steps))
    }

    pub fn steps(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Horizon {
    type Error = ForecastError;

    fn try_from(steps: usize) -> Result<Self> {
        Self::new(steps)
    }
}

impl From<Horizon> for usize {
    fn from(h: Horizon) -> usize {
        h.0
    }
}

/// Splits into contiguous train, validation and test segments, in time order.
///
/// Validation may be empty only when `validation_fraction` is zero; in that
/// case the middle element is `None`.
pub fn split_chronological(
    series: &TimeSeries,
    spec: &SplitSpec,
) -> Result<(TimeSeries, Option<TimeSeries>, TimeSeries)> {
    if series.missing_count() > 0 {
        return Err(ForecastError::Split(
            "series contains missing values".into(),
        ));
    }
    let n = series.len();
    let (train, validation, test) = spec.lengths(n);
    let empty = |segment: &str| {
        ForecastError::Split(format!(
            "{segment} segment would be empty for a series of {n} points with fractions ({}, {})",
            spec.train_fraction, spec.validation_fraction
        ))
    };
    if train == 0 {
        return Err(empty("train"));
    }
    if validation == 0 && spec.validation_fraction > 0.0 {
        return Err(empty("validation"));
    }
    if test == 0 {
        return Err(empty("test"));
    }
    let train_part = series.slice(0, train)?;
    let validation_part = if validation > 0 {
        Some(series.slice(train, train + validation)?)
    } else {
        None
    };
    let test_part = series.slice(train + validation, n)?;
    Ok((train_part, validation_part, test_part))
}

/// Parses CSV bytes into a regular series.
///
/// Rows are sorted by timestamp; interior gaps that are whole multiples of the
/// modal spacing are filled with missing values.
pub fn ingest_csv<R: Read>(
    raw: R,
    timestamp_column: &str,
    value_column: &str,
) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(raw);
    let headers = reader
        .headers()
        .map_err(|e| ForecastError::Ingest {
            row: 0,
            message: format!("unreadable header: {e}"),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ForecastError::Ingest {
                row: 0,
                message: format!("header has no column named '{name}'"),
            })
    };
    let ts_idx = column(timestamp_column)?;
    let val_idx = column(value_column)?;

    let mut rows: Vec<(i64, Option<f64>)> = Vec::new();
    let mut seen: HashMap<i64, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ForecastError::Ingest {
            row,
            message: e.to_string(),
        })?;
        let raw_ts = record.get(ts_idx).unwrap_or("");
        let ts = parse_timestamp(raw_ts).ok_or_else(|| ForecastError::Ingest {
            row,
            message: format!("unparseable timestamp '{raw_ts}'"),
        })?;
        let raw_val = record.get(val_idx).unwrap_or("");
        let value = if raw_val.is_empty() {
            None
        } else {
            let v: f64 = raw_val.parse().map_err(|_| ForecastError::Ingest {
                row,
                message: format!("unparseable value '{raw_val}'"),
            })?;
            if !v.is_finite() {
                return Err(ForecastError::Ingest {
                    row,
                    message: format!("non-finite value '{raw_val}'"),
                });
            }
            Some(v)
        };
        if let Some(first) = seen.insert(ts, row) {
            return Err(ForecastError::Ingest {
                row,
                message: format!("duplicate timestamp {raw_ts} (first seen at row {first})"),
            });
        }
        rows.push((ts, value));
    }
    if rows.len() < 3 {
        return Err(ForecastError::TooShort {
            needed: 3,
            got: rows.len(),
        });
    }
    rows.sort_by_key(|(t, _)| *t);
    let sorted: Vec<i64> = rows.iter().map(|(t, _)| *t).collect();
    let frequency = infer_frequency(&sorted)?;

    let start = sorted[0];
    let span = (sorted[sorted.len() - 1] - start) / frequency;
    let len = usize::try_from(span)
        .ok()
        .and_then(|s| s.checked_add(1))
        .filter(|&l| l <= MAX_GRID_LEN)
        .ok_or_else(|| ForecastError::IrregularSeries("grid too large to materialize".into()))?;
    let mut values = vec![None; len];
    for (t, v) in rows {
        values[((t - start) / frequency) as usize] = v;
    }
    TimeSeries::regular(value_column, start, frequency, values)
}

/// Modal spacing of sorted, distinct timestamps. Ties go to the smaller gap.
///
/// Every gap must be a whole multiple of the result, otherwise the series is
/// irregular.
pub fn infer_frequency(sorted: &[i64]) -> Result<i64> {
    if sorted.len() < 2 {
        return Err(ForecastError::TooShort {
            needed: 2,
            got: sorted.len(),
        });
    }
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for w in sorted.windows(2) {
        *counts.entry(w[1] - w[0]).or_default() += 1;
    }
    let (&gap, _) = counts
        .iter()
        .max_by(|(ga, ca), (gb, cb)| ca.cmp(cb).then(gb.cmp(ga)))
        .expect("at least one gap");
    if gap <= 0 {
        return Err(ForecastError::IrregularSeries(
            "non-increasing timestamps".into(),
        ));
    }
    if let Some(bad) = counts.keys().find(|&&g| g % gap != 0) {
        return Err(ForecastError::IrregularSeries(format!(
            "gap of {bad}s is not a multiple of the modal spacing {gap}s"
        )));
    }
    Ok(gap)
}

/// Accepts epoch seconds, RFC 3339, or naive ISO-8601 date/datetime (taken as UTC).
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if let Ok(epoch) = raw.parse::<i64>() {
        return Some(epoch);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    for fmt in NAIVE {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

pub fn format_timestamp(epoch: i64) -> String {
    match DateTime::from_timestamp(epoch, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => epoch.to_string(),
    }
}
