//! Forecast accuracy metrics, rolling-origin cross-validation, model
//! leaderboards and residual-based anomaly detection.

mod anomaly;
mod cv;

pub use anomaly::{detect_anomalies, AnomalyEvent, Direction};
pub use cv::{
    compare_models, fold_geometry, format_leaderboard, rolling_origin_cv, EvaluationReport, Fold,
    FoldModel, FoldResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};

/// MAE, MSE, RMSE and MAPE over one set of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Percent; `None` when every actual is zero.
    pub mape: Option<f64>,
    pub n: usize,
    /// Zero-actual points left out of the MAPE.
    pub mape_excluded: usize,
}

/// Point accuracy of `predicted` against `actual`.
pub fn metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricSet> {
    if actual.len() != predicted.len() {
        return Err(ForecastError::arg(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(ForecastError::arg("metrics need at least one point"));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(ForecastError::arg("metrics need finite values"));
    }
    let n = actual.len();
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut pct_sum = 0.0;
    let mut excluded = 0;
    for (a, p) in actual.iter().zip(predicted) {
        let err = (a - p).abs();
        abs_sum += err;
        sq_sum += err * err;
        if *a == 0.0 {
            excluded += 1;
        } else {
            pct_sum += err / a.abs();
        }
    }
    let mse = sq_sum / n as f64;
    let counted = n - excluded;
    Ok(MetricSet {
        mae: abs_sum / n as f64,
        mse,
        rmse: mse.sqrt(),
        mape: (counted > 0).then(|| 100.0 * pct_sum / counted as f64),
        n,
        mape_excluded: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let m = metrics(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
        assert_eq!(m.mae, 15.0);
        assert_eq!(m.mse, 250.0);
        assert!((m.rmse - 250f64.sqrt()).abs() < 1e-12);
        // Errors 10 and 20 on actuals 100 and 200 are both 10%.
        let oracle = 100.0 * (10.0 / 100.0 + 20.0 / 200.0) / 2.0;
        assert!((m.mape.unwrap() - oracle).abs() < 1e-9);
        assert_eq!((m.n, m.mape_excluded), (2, 0));
    }

    #[test]
    fn zero_actual_is_skipped() {
        let m = metrics(&[0.0, 10.0], &[1.0, 10.0]).unwrap();
        assert_eq!(m.mape, Some(0.0));
        assert_eq!(m.mape_excluded, 1);
        assert_eq!(m.mae, 0.5);
    }

    #[test]
    fn all_zero_actuals() {
        let m = metrics(&[0.0, 0.0], &[1.0, -1.0]).unwrap();
        assert_eq!(m.mape, None);
        assert_eq!(m.mae, 1.0);
    }

    #[test]
    fn perfect_prediction() {
        let m = metrics(&[3.0, -4.0, 5.0], &[3.0, -4.0, 5.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse, m.mape), (0.0, 0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            metrics(&[1.0], &[1.0, 2.0]),
            Err(ForecastError::InvalidArgument(_))
        ));
        assert!(metrics(&[], &[]).is_err());
    }
}
