use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::stats::ols;
use crate::timeseries::TimeSeries;

/// 5% Dickey-Fuller critical value for the constant-only regression.
pub const ADF_CRITICAL_5PCT: f64 = -2.86;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio of the coefficient on y[t-1].
    pub statistic: f64,
    pub lags: usize,
    pub stationary_at_5pct: bool,
}

/// floor(cbrt(n)).
pub fn default_adf_lag(n: usize) -> usize {
    (n as f64).cbrt().floor() as usize
}

/// Augmented Dickey-Fuller test with a constant:
/// `Δy_t = c + γ y_{t-1} + Σ_{i=1..max_lag} δ_i Δy_{t-i} + ε_t`.
pub fn adf_statistic(series: &TimeSeries, max_lag: usize) -> Result<AdfResult> {
    let y = series.complete_values()?;
    let n = y.len();
    if n < max_lag + 10 {
        return Err(ForecastError::TooShort {
            needed: max_lag + 10,
            got: n,
        });
    }
    let dy = |t: usize| y[t] - y[t - 1];
    let mut rows = Vec::with_capacity(n - max_lag - 1);
    let mut target = Vec::with_capacity(n - max_lag - 1);
    for t in max_lag + 1..n {
        let mut row = Vec::with_capacity(max_lag + 2);
        row.push(1.0);
        row.push(y[t - 1]);
        row.extend((1..=max_lag).map(|i| dy(t - i)));
        rows.push(row);
        target.push(dy(t));
    }
    let fit = ols(&rows, &target)?;
    let se = fit.standard_error(1);
    if !(se > 0.0 && se.is_finite()) {
        return Err(ForecastError::Numerical(
            "unit-root coefficient has no sampling variance (perfect fit)".into(),
        ));
    }
    let statistic = fit.coefficients[1] / se;
    Ok(AdfResult {
        statistic,
        lags: max_lag,
        stationary_at_5pct: statistic < ADF_CRITICAL_5PCT,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_is_stationary() {
        let s = TimeSeries::from_values("x", 0, 1, &noise(500, 11)).unwrap();
        let r = adf_statistic(&s, default_adf_lag(500)).unwrap();
        assert!(r.stationary_at_5pct, "{r:?}");
        assert!(r.statistic < -5.0);
    }

    #[test]
    fn random_walk_is_not() {
        let walk: Vec<f64> = noise(500, 3)
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect();
        let s = TimeSeries::from_values("x", 0, 1, &walk).unwrap();
        let r = adf_statistic(&s, default_adf_lag(500)).unwrap();
        assert!(!r.stationary_at_5pct, "{r:?}");
    }

    #[test]
    fn differenced_ramp_with_jitter() {
        let e = noise(200, 5);
        let ramp: Vec<f64> = (0..200).map(|t| 3.0 * t as f64 + 1e-3 * e[t]).collect();
        let s = TimeSeries::from_values("x", 0, 1, &ramp).unwrap();
        let (d, _) = crate::preprocess::difference(&s, 1).unwrap();
        let r = adf_statistic(&d, default_adf_lag(d.len())).unwrap();
        assert!(r.stationary_at_5pct, "{r:?}");
    }

    #[test]
    fn too_short_and_singular() {
        let s = TimeSeries::from_values("x", 0, 1, &[1.0; 8]).unwrap();
        assert!(matches!(
            adf_statistic(&s, 0),
            Err(ForecastError::TooShort { .. })
        ));
        let flat = TimeSeries::from_values("x", 0, 1, &[1.0; 40]).unwrap();
        assert!(matches!(
            adf_statistic(&flat, 1),
            Err(ForecastError::Numerical(_))
        ));
    }
}
