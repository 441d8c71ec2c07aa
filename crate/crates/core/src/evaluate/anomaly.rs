use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::stats::mad_scale;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Spike,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub timestamp: i64,
    pub index: usize,
    pub observed: f64,
    pub expected: f64,
    /// Residual divided by the robust (MAD) scale.
    pub score: f64,
    pub direction: Direction,
}

/// Flags points whose one-step residual is at least `threshold` robust
/// standard deviations from zero.
///
/// `expected[t]` is the one-step prediction for `observed[t]`, or `None`
/// where the model has none (e.g. lags lost to differencing). Events are
/// returned in chronological order; a zero MAD scale yields no events.
pub fn detect_anomalies(
    timestamps: &[i64],
    observed: &[f64],
    expected: &[Option<f64>],
    threshold: f64,
) -> Result<Vec<AnomalyEvent>> {
    if !(threshold > 0.0) {
        return Err(ForecastError::arg(format!(
            "threshold {threshold} must be positive"
        )));
    }
    if timestamps.len() != observed.len() || observed.len() != expected.len() {
        return Err(ForecastError::arg(
            "timestamps, observations and predictions differ in length",
        ));
    }
    let scored: Vec<(usize, f64, f64)> = expected
        .iter()
        .enumerate()
        .filter_map(|(t, e)| e.map(|e| (t, observed[t], e)))
        .collect();
    if scored.is_empty() {
        return Ok(Vec::new());
    }
    let residuals: Vec<f64> = scored.iter().map(|(_, y, e)| y - e).collect();
    let scale = mad_scale(&residuals);
    if !(scale > 0.0) {
        return Ok(Vec::new());
    }
    Ok(scored
        .into_iter()
        .zip(residuals)
        .filter_map(|((t, y, e), r)| {
            let score = r / scale;
            (score.abs() >= threshold).then_some(AnomalyEvent {
                timestamp: timestamps[t],
                index: t,
                observed: y,
                expected: e,
                score,
                direction: if y > e {
                    Direction::Spike
                } else {
                    Direction::Drop
                },
            })
        })
        .collect())
}
