use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metrics, MetricSet};
use crate::error::{ForecastError, Result};
use crate::timeseries::TimeSeries;

/// Anything that can be refitted on a prefix and forecast the next `h` points.
pub trait FoldModel: Sync {
    /// Human-readable name, e.g. `ARIMA(1,1,1)`.
    fn label(&self) -> String;
    /// Stable identifier used to break ties.
    fn digest(&self) -> String;
    /// Shortest training prefix the model accepts.
    fn min_train_len(&self) -> usize;
    fn fit_forecast(&self, train: &TimeSeries, horizon: usize) -> Result<Vec<f64>>;
}

impl<T: FoldModel + ?Sized> FoldModel for &T {
    fn label(&self) -> String {
        (**self).label()
    }
    fn digest(&self) -> String {
        (**self).digest()
    }
    fn min_train_len(&self) -> usize {
        (**self).min_train_len()
    }
    fn fit_forecast(&self, train: &TimeSeries, horizon: usize) -> Result<Vec<f64>> {
        (**self).fit_forecast(train, horizon)
    }
}

/// One expanding-window split: train on `[0, train_len)`, test on the next `horizon` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train_len: usize,
    pub horizon: usize,
}

impl Fold {
    pub fn test_range(&self) -> std::ops::Range<usize> {
        self.train_len..self.train_len + self.horizon
    }
}

/// Evenly spaced origins so that the last test window ends at the series end.
pub fn fold_geometry(n: usize, k: usize, horizon: usize, min_train: usize) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(ForecastError::arg(
            "cross-validation needs at least 2 folds",
        ));
    }
    if horizon == 0 {
        return Err(ForecastError::arg("fold horizon must be at least 1"));
    }
    let needed = min_train.max(1).saturating_add(k.saturating_mul(horizon));
    if n < needed {
        return Err(ForecastError::arg(format!(
            "{k} folds of horizon {horizon} need a series of at least {needed} points, got {n}"
        )));
    }
    Ok((0..k)
        .map(|i| Fold {
            index: i,
            train_len: n - (k - i) * horizon,
            horizon,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: Fold,
    pub train_end: i64,
    pub test_start: i64,
    pub metrics: MetricSet,
}

/// Per-model cross-validation outcome; a failed model keeps its error and has no metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub digest: String,
    pub folds: Vec<FoldResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<MetricSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvaluationReport {
    fn failed(model: &dyn FoldModel, error: &ForecastError) -> Self {
        Self {
            model: model.label(),
            digest: model.digest(),
            folds: Vec::new(),
            aggregate: None,
            wall_clock_ms: None,
            error: Some(error.to_string()),
        }
    }

    /// Drops wall-clock timings so the report is reproducible byte for byte.
    pub fn without_timing(mut self) -> Self {
        self.wall_clock_ms = None;
        self
    }
}

fn run_folds(
    series: &TimeSeries,
    model: &dyn FoldModel,
    folds: &[Fold],
) -> Result<EvaluationReport> {
    let values = series.complete_values()?;
    let started = Instant::now();
    let mut results = Vec::with_capacity(folds.len());
    let mut pooled_actual = Vec::new();
    let mut pooled_pred = Vec::new();
    for fold in folds {
        let train = series.slice(0, fold.train_len)?;
        let actual = &values[fold.test_range()];
        let predicted = model.fit_forecast(&train, fold.horizon)?;
        if predicted.len() != fold.horizon {
            return Err(ForecastError::FitFailure(format!(
                "{} returned {} points for a horizon of {}",
                model.label(),
                predicted.len(),
                fold.horizon
            )));
        }
        let m = metrics(actual, &predicted)
            .map_err(|e| ForecastError::FitFailure(format!("fold {}: {e}", fold.index)))?;
        results.push(FoldResult {
            fold: *fold,
            train_end: series.timestamps()[fold.train_len - 1],
            test_start: series.timestamps()[fold.train_len],
            metrics: m,
        });
        pooled_actual.extend_from_slice(actual);
        pooled_pred.extend(predicted);
    }
    Ok(EvaluationReport {
        model: model.label(),
        digest: model.digest(),
        folds: results,
        aggregate: Some(metrics(&pooled_actual, &pooled_pred)?),
        wall_clock_ms: Some(started.elapsed().as_millis() as u64),
        error: None,
    })
}

/// Expanding-window cross-validation with `k` folds of `horizon` points each.
/// Each fold is an independent fit; the aggregate pools every test point.
pub fn rolling_origin_cv(
    series: &TimeSeries,
    model: &dyn FoldModel,
    k: usize,
    horizon: usize,
) -> Result<EvaluationReport> {
    let folds = fold_geometry(series.len(), k, horizon, model.min_train_len())?;
    run_folds(series, model, &folds)
}

fn rank_key(r: &EvaluationReport) -> (bool, f64, f64) {
    match &r.aggregate {
        Some(m) => (false, m.mape.unwrap_or(f64::INFINITY), m.rmse),
        None => (true, f64::INFINITY, f64::INFINITY),
    }
}

/// Evaluates every model on identical folds and ranks them by pooled MAPE,
/// then pooled RMSE, then digest. Failed models go last with their error.
pub fn compare_models<M: FoldModel>(
    series: &TimeSeries,
    models: &[M],
    k: usize,
    horizon: usize,
) -> Result<Vec<EvaluationReport>> {
    if models.is_empty() {
        return Err(ForecastError::arg("nothing to compare"));
    }
    let folds = fold_geometry(series.len(), k, horizon, 1)?;
    let mut reports: Vec<EvaluationReport> = models
        .par_iter()
        .map(|m| {
            let needed = m.min_train_len();
            let outcome = if folds[0].train_len < needed {
                Err(ForecastError::TooShort {
                    needed,
                    got: folds[0].train_len,
                })
            } else {
                run_folds(series, m, &folds)
            };
            outcome.unwrap_or_else(|e| EvaluationReport::failed(m, &e))
        })
        .collect();
    reports.sort_by(|a, b| {
        let (fa, ma, ra) = rank_key(a);
        let (fb, mb, rb) = rank_key(b);
        fa.cmp(&fb)
            .then(ma.total_cmp(&mb))
            .then(ra.total_cmp(&rb))
            .then_with(|| a.digest.cmp(&b.digest))
    });
    if reports.iter().all(|r| r.error.is_some()) {
        return Err(ForecastError::Comparison(
            reports
                .into_iter()
                .map(|r| (r.model, r.error.unwrap_or_default()))
                .collect(),
        ));
    }
    Ok(reports)
}

/// Aligned plain-text table with columns Model | MAE | MSE | RMSE | MAPE.
///
/// Numbers use the shortest representation that round-trips, so they match
/// the structured output exactly.
pub fn format_leaderboard(reports: &[EvaluationReport]) -> String {
    let header = ["Model", "MAE", "MSE", "RMSE", "MAPE"].map(String::from);
    let mut rows = vec![header];
    for r in reports {
        rows.push(match (&r.aggregate, &r.error) {
            (Some(m), _) => [
                r.model.clone(),
                m.mae.to_string(),
                m.mse.to_string(),
                m.rmse.to_string(),
                m.mape.map_or_else(|| "n/a".to_string(), |v| v.to_string()),
            ],
            (None, err) => {
                let failed = format!("failed: {}", err.as_deref().unwrap_or("unknown error"));
                [
                    r.model.clone(),
                    failed,
                    String::new(),
                    String::new(),
                    String::new(),
                ]
            }
        });
    }
    let mut widths = [0usize; 5];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Returns the true continuation of a known full series.
    struct Oracle(Vec<f64>);

    impl FoldModel for Oracle {
        fn label(&self) -> String {
            "oracle".into()
        }
        fn digest(&self) -> String {
            "0".into()
        }
        fn min_train_len(&self) -> usize {
            1
        }
        fn fit_forecast(&self, train: &TimeSeries, h: usize) -> Result<Vec<f64>> {
            Ok(self.0[train.len()..train.len() + h].to_vec())
        }
    }

    struct Naive(&'static str);

    impl FoldModel for Naive {
        fn label(&self) -> String {
            "naive".into()
        }
        fn digest(&self) -> String {
            self.0.into()
        }
        fn min_train_len(&self) -> usize {
            1
        }
        fn fit_forecast(&self, train: &TimeSeries, h: usize) -> Result<Vec<f64>> {
            let last = train.complete_values()?[train.len() - 1];
            Ok(vec![last; h])
        }
    }

    struct Broken;

    impl FoldModel for Broken {
        fn label(&self) -> String {
            "broken".into()
        }
        fn digest(&self) -> String {
            "b".into()
        }
        fn min_train_len(&self) -> usize {
            1
        }
        fn fit_forecast(&self, _: &TimeSeries, _: usize) -> Result<Vec<f64>> {
            Err(ForecastError::FitFailure("always".into()))
        }
    }

    fn series(n: usize) -> (TimeSeries, Vec<f64>) {
        let v: Vec<f64> = (0..n)
            .map(|t| 10.0 + (t as f64 * 0.9).sin() * 4.0 + t as f64)
            .collect();
        (TimeSeries::from_values("y", 1000, 60, &v).unwrap(), v)
    }

    #[test]
    fn geometry_example() {
        let folds = fold_geometry(10, 2, 2, 1).unwrap();
        assert_eq!(folds[0].train_len, 6);
        assert_eq!(folds[0].test_range(), 6..8);
        assert_eq!(folds[1].train_len, 8);
        assert_eq!(folds[1].test_range(), 8..10);
    }

    #[test]
    fn infeasible_geometry_reports_minimum() {
        let err = fold_geometry(10, 5, 2, 5).unwrap_err();
        assert!(err.to_string().contains("at least 15 points"), "{err}");
        assert!(fold_geometry(10, 1, 2, 1).is_err());
    }

    #[test]
    fn oracle_scores_zero_and_pools() {
        let (s, v) = series(30);
        let r = rolling_origin_cv(&s, &Oracle(v), 4, 3).unwrap();
        let agg = r.aggregate.unwrap();
        assert_eq!(
            (agg.mae, agg.mse, agg.rmse, agg.mape),
            (0.0, 0.0, 0.0, Some(0.0))
        );
        assert_eq!(agg.n, r.folds.iter().map(|f| f.metrics.n).sum::<usize>());
        for f in &r.folds {
            assert!(f.train_end < f.test_start);
        }
    }

    #[test]
    fn ranking_and_failures() {
        let (s, v) = series(30);
        let oracle = Oracle(v);
        let naive = Naive("n");
        let models: Vec<&dyn FoldModel> = vec![&Broken, &naive, &oracle];
        let ranked = compare_models(&s, &models, 3, 2).unwrap();
        let labels: Vec<_> = ranked.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(labels, ["oracle", "naive", "broken"]);
        assert!(ranked[2].error.as_deref().unwrap().contains("always"));
    }

    #[test]
    fn identical_models_tie_break_on_digest() {
        let (s, _) = series(20);
        let ranked = compare_models(&s, &[Naive("z"), Naive("a")], 2, 2).unwrap();
        assert_eq!(ranked[0].aggregate, ranked[1].aggregate);
        assert_eq!(ranked[0].digest, "a");
        let flipped = compare_models(&s, &[Naive("a"), Naive("z")], 2, 2).unwrap();
        assert_eq!(flipped, ranked);
    }

    #[test]
    fn all_failures() {
        let (s, _) = series(20);
        assert!(
            matches!(compare_models(&s, &[Broken], 2, 2), Err(ForecastError::Comparison(c)) if c.len() == 1)
        );
    }

    #[test]
    fn table_layout() {
        let (s, _) = series(20);
        let ranked = compare_models(&s, &[Naive("a")], 2, 2).unwrap();
        let table = format_leaderboard(&ranked);
        let lines: Vec<&str> = table.lines().collect();
        let header: Vec<&str> = lines[0].split('|').map(str::trim).collect();
        assert_eq!(header, ["Model", "MAE", "MSE", "RMSE", "MAPE"]);
        assert_eq!(lines[0].len(), lines[2].len());
        let m = ranked[0].aggregate.unwrap();
        assert!(lines[2].contains(&m.rmse.to_string()));
    }
}
