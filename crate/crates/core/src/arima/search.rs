use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_arima, ArimaConfig, ArimaOrder, SeasonalOrder};
use crate::error::{ForecastError, Result};
use crate::evaluate::metrics;
use crate::timeseries::TimeSeries;

/// Guard against accidentally exponential searches.
pub const MAX_COMBINATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridCriterion {
    Aic,
    ValidationMae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonalRanges {
    pub p_max: usize,
    pub d_max: usize,
    pub q_max: usize,
    pub s: usize,
}

/// Inclusive upper bounds on every order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRanges {
    pub p_max: usize,
    pub d_max: usize,
    pub q_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal: Option<SeasonalRanges>,
}

impl GridRanges {
    pub fn combinations(&self) -> usize {
        let base = (self.p_max + 1) * (self.d_max + 1) * (self.q_max + 1);
        match self.seasonal {
            Some(s) => base
                .saturating_mul(s.p_max + 1)
                .saturating_mul(s.d_max + 1)
                .saturating_mul(s.q_max + 1),
            None => base,
        }
    }

    fn configs(&self) -> Vec<ArimaConfig> {
        let seasonal: Vec<Option<SeasonalOrder>> = match self.seasonal {
            None => vec![None],
            Some(r) => (0..=r.p_max)
                .flat_map(|sp| {
                    (0..=r.d_max).flat_map(move |sd| {
                        (0..=r.q_max).map(move |sq| Some(SeasonalOrder::new(sp, sd, sq, r.s)))
                    })
                })
                .collect(),
        };
        let mut out = Vec::new();
        for p in 0..=self.p_max {
            for d in 0..=self.d_max {
                for q in 0..=self.q_max {
                    for s in &seasonal {
                        out.push(ArimaConfig::new(ArimaOrder::new(p, d, q), *s));
                    }
                }
            }
        }
        out
    }
}

/// One row of the search result. Failed fits carry an infinite score and the cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub config: ArimaConfig,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GridEntry {
    fn sort_key(&self) -> (usize, usize, usize, usize, usize, usize) {
        let o = self.config.order;
        let s = self
            .config
            .seasonal
            .unwrap_or(SeasonalOrder::new(0, 0, 0, 0));
        (o.p, o.d, o.q, s.p, s.d, s.q)
    }
}

/// Fits every order combination and ranks them by `criterion`, ascending.
///
/// Ties are broken by lexicographic (p, d, q, P, D, Q). `validation` is
/// required for [`GridCriterion::ValidationMae`] and must directly follow `train`.
pub fn grid_search_arima(
    train: &TimeSeries,
    validation: Option<&TimeSeries>,
    ranges: &GridRanges,
    criterion: GridCriterion,
) -> Result<Vec<GridEntry>> {
    let combos = ranges.combinations();
    if combos > MAX_COMBINATIONS {
        return Err(ForecastError::arg(format!(
            "{combos} combinations exceed the limit of {MAX_COMBINATIONS}"
        )));
    }
    if let Some(s) = ranges.seasonal {
        if s.s < 2 {
            return Err(ForecastError::arg("seasonal period must be at least 2"));
        }
    }
    let actual = match (criterion, validation) {
        (GridCriterion::ValidationMae, None) => {
            return Err(ForecastError::arg(
                "validation_mae needs a validation series",
            ))
        }
        (GridCriterion::ValidationMae, Some(v)) => Some(v.complete_values()?),
        (GridCriterion::Aic, _) => None,
    };

    let mut entries: Vec<GridEntry> = ranges
        .configs()
        .into_par_iter()
        .map(|config| {
            let scored = fit_arima(train, &config).and_then(|fit| match &actual {
                None => Ok(fit.aic),
                Some(actual) => {
                    let f = fit.forecast(actual.len(), 0.95)?;
                    Ok(metrics(actual, &f.points)?.mae)
                }
            });
            match scored {
                Ok(score) if score.is_finite() => GridEntry {
                    config,
                    score,
                    error: None,
                },
                Ok(score) => GridEntry {
                    config,
                    score: f64::INFINITY,
                    error: Some(format!("non-finite score {score}")),
                },
                Err(e) => GridEntry {
                    config,
                    score: f64::INFINITY,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.sort_key().cmp(&b.sort_key()))
    });
    if entries.iter().all(|e| e.error.is_some()) {
        return Err(ForecastError::SearchFailure(
            entries
                .into_iter()
                .map(|e| (e.config.label(), e.error.unwrap_or_default()))
                .collect(),
        ));
    }
    Ok(entries)
}
