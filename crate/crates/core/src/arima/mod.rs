//! ARIMA(p,d,q) and seasonal ARIMA(p,d,q)(P,D,Q)[s] fitted by conditional sum
//! of squares.
//!
//! The working series is `w = Δ^d Δ_s^D x`. Residuals follow
//!
//! ```text
//! e_t = w_t - c - Σ_k a_k w_{t-k} - Σ_k m_k e_{t-k}
//! ```
//!
//! where `a` and `m` are the multiplied-out AR and MA lag polynomials
//! `φ(B)Φ(B^s)` and `θ(B)Θ(B^s)`. Unobserved `w` take the working-series
//! mean and unobserved `e` are zero. The sum of squares runs from
//! `t = p + P·s`, so a pure AR fit reduces to least squares on lagged values.

mod poly;
mod search;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::model::PointForecast;
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::preprocess::{difference, TransformRecord};
use crate::stats::{mean, ols, population_std, z_for_confidence};
use crate::timeseries::TimeSeries;

pub use poly::psi_weights;
pub use search::{grid_search_arima, GridCriterion, GridEntry, GridRanges, SeasonalRanges};

/// Root-modulus margin below which the soft stationarity/invertibility penalty applies.
const ROOT_MARGIN: f64 = 1.001;
const PENALTY_WEIGHT: f64 = 1e6;
const RESTARTS: usize = 3;

/// Non-seasonal orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }
}

/// Seasonal orders (P, D, Q) with period `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeasonalOrder {
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub s: usize,
}

impl SeasonalOrder {
    pub fn new(p: usize, d: usize, q: usize, s: usize) -> Self {
        Self { p, d, q, s }
    }

    fn is_active(&self) -> bool {
        self.p + self.d + self.q > 0
    }
}

/// What to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaConfig {
    pub order: ArimaOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal: Option<SeasonalOrder>,
    /// `None` includes an intercept exactly when no differencing is applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<bool>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl ArimaConfig {
    pub fn new(order: ArimaOrder, seasonal: Option<SeasonalOrder>) -> Self {
        Self {
            order,
            seasonal,
            intercept: None,
            seed: default_seed(),
        }
    }

    pub fn with_intercept(mut self, include: bool) -> Self {
        self.intercept = Some(include);
        self
    }

    fn seasonal_or_none(&self) -> SeasonalOrder {
        self.seasonal.unwrap_or(SeasonalOrder::new(0, 0, 0, 1))
    }

    pub fn includes_intercept(&self) -> bool {
        let s = self.seasonal_or_none();
        self.intercept.unwrap_or(self.order.d + s.d == 0)
    }

    /// Number of estimated mean-equation parameters (excluding σ²).
    pub fn parameter_count(&self) -> usize {
        let s = self.seasonal_or_none();
        self.order.p + self.order.q + s.p + s.q + usize::from(self.includes_intercept())
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.seasonal_or_none();
        if let Some(seasonal) = self.seasonal {
            if seasonal.is_active() && seasonal.s < 2 {
                return Err(ForecastError::Config(format!(
                    "seasonal period must be at least 2, got {}",
                    seasonal.s
                )));
            }
        }
        let has_structure = self.order.p + self.order.q + self.order.d + s.p + s.q + s.d > 0;
        if !has_structure && !self.includes_intercept() {
            return Err(ForecastError::Config(
                "ARIMA(0,0,0) without intercept has nothing to estimate".into(),
            ));
        }
        Ok(())
    }

    /// Shortest input series `fit_arima` accepts.
    pub fn min_length(&self) -> usize {
        let s = self.seasonal_or_none();
        let lost = self.order.d + s.d * s.s;
        let cond = self.order.p + s.p * s.s;
        let by_rule = lost + 10 + self.order.p + self.order.q + s.p + s.q;
        // n_effective must also leave room for the parameters.
        let by_conditioning = lost + cond + self.parameter_count() + 2;
        by_rule.max(by_conditioning)
    }

    pub fn label(&self) -> String {
        let o = self.order;
        match self.seasonal.filter(SeasonalOrder::is_active) {
            Some(s) => format!(
                "SARIMA({},{},{})({},{},{})[{}]",
                o.p, o.d, o.q, s.p, s.d, s.q, s.s
            ),
            None => format!("ARIMA({},{},{})", o.p, o.d, o.q),
        }
    }
}

/// Estimated coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaParams {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
}

impl ArimaParams {
    fn ar_poly(&self, s: usize) -> Vec<f64> {
        poly::multiply(
            &poly::ar_polynomial(&self.phi, 1),
            &poly::ar_polynomial(&self.seasonal_phi, s),
        )
    }

    fn ma_poly(&self, s: usize) -> Vec<f64> {
        poly::multiply(
            &poly::ma_polynomial(&self.theta, 1),
            &poly::ma_polynomial(&self.seasonal_theta, s),
        )
    }
}

/// A fitted model with enough state to forecast without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedArima {
    pub config: ArimaConfig,
    pub params: ArimaParams,
    /// Differencing records in application order (seasonal first).
    pub differencing: Vec<TransformRecord>,
    pub css: f64,
    pub aic: f64,
    pub n_effective: usize,
    /// The differenced series the recursion runs on.
    pub working: Vec<f64>,
    pub working_mean: f64,
    /// One residual per working-series point.
    pub residuals: Vec<f64>,
}

/// Flat parameter vector layout used by the optimizer.
#[derive(Clone, Copy)]
struct Layout {
    intercept: bool,
    p: usize,
    q: usize,
    sp: usize,
    sq: usize,
    s: usize,
}

impl Layout {
    fn new(config: &ArimaConfig) -> Self {
        let s = config.seasonal_or_none();
        Self {
            intercept: config.includes_intercept(),
            p: config.order.p,
            q: config.order.q,
            sp: s.p,
            sq: s.q,
            s: s.s.max(1),
        }
    }

    fn len(&self) -> usize {
        usize::from(self.intercept) + self.p + self.q + self.sp + self.sq
    }

    /// AR reach, i.e. the number of leading observations the CSS conditions on.
    fn conditioning(&self) -> usize {
        self.p + self.sp * self.s
    }

    fn unpack(&self, x: &[f64], intercept_scale: f64) -> ArimaParams {
        let mut it = x.iter().copied();
        let intercept = if self.intercept {
            it.next().unwrap() * intercept_scale
        } else {
            0.0
        };
        let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
        let phi = take(self.p);
        let theta = take(self.q);
        let seasonal_phi = take(self.sp);
        let seasonal_theta = take(self.sq);
        ArimaParams {
            phi,
            theta,
            seasonal_phi,
            seasonal_theta,
            intercept,
            sigma2: f64::NAN,
        }
    }

    fn pack(&self, params: &ArimaParams, intercept_scale: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        if self.intercept {
            x.push(params.intercept / intercept_scale);
        }
        x.extend(&params.phi);
        x.extend(&params.theta);
        x.extend(&params.seasonal_phi);
        x.extend(&params.seasonal_theta);
        x
    }
}

/// Residuals of the CSS recursion for given RHS coefficient vectors.
/// `ar[k]` multiplies `w_{t-k-1}`, `ma[k]` multiplies `e_{t-k-1}`.
fn recursion_residuals(
    w: &[f64],
    presample: f64,
    intercept: f64,
    ar: &[f64],
    ma: &[f64],
) -> Vec<f64> {
    let mut e = Vec::with_capacity(w.len());
    for t in 0..w.len() {
        e.push(w[t] - predict_next(&w[..t], &e, presample, intercept, ar, ma));
    }
    e
}

/// One-step prediction of the value following `w`, given its residual history.
fn predict_next(
    w: &[f64],
    e: &[f64],
    presample: f64,
    intercept: f64,
    ar: &[f64],
    ma: &[f64],
) -> f64 {
    let t = w.len();
    let mut pred = intercept;
    for (k, a) in ar.iter().enumerate() {
        if *a != 0.0 {
            pred += a * if t > k { w[t - k - 1] } else { presample };
        }
    }
    for (k, m) in ma.iter().enumerate() {
        if *m != 0.0 && t > k {
            pred += m * e[t - k - 1];
        }
    }
    pred
}

/// RHS coefficient vectors (`a_k`, `m_k`) from lag polynomials.
fn rhs(ar_poly: &[f64], ma_poly: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        ar_poly[1..].iter().map(|c| -c).collect(),
        ma_poly[1..].to_vec(),
    )
}

struct Objective<'a> {
    layout: Layout,
    w: &'a [f64],
    mean: f64,
    scale: f64,
}

impl Objective<'_> {
    fn css(&self, params: &ArimaParams) -> f64 {
        let (ar, ma) = rhs(
            &params.ar_poly(self.layout.s),
            &params.ma_poly(self.layout.s),
        );
        let e = recursion_residuals(self.w, self.mean, params.intercept, &ar, &ma);
        e[self.layout.conditioning()..].iter().map(|r| r * r).sum()
    }

    fn penalty(&self, params: &ArimaParams) -> f64 {
        let s = self.layout.s;
        poly::unit_root_violation(&params.ar_poly(s), ROOT_MARGIN)
            + poly::unit_root_violation(&params.ma_poly(s), ROOT_MARGIN)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let params = self.layout.unpack(x, self.scale);
        let css = self.css(&params);
        if !css.is_finite() {
            return f64::INFINITY;
        }
        css + PENALTY_WEIGHT * self.penalty(&params)
    }
}

/// Fits by minimizing the conditional sum of squares with Nelder-Mead,
/// started from a Hannan-Rissanen estimate and two seeded perturbations of it.
pub fn fit_arima(series: &TimeSeries, config: &ArimaConfig) -> Result<FittedArima> {
    config.validate()?;
    let x = series.complete_values()?;
    let needed = config.min_length();
    if x.len() < needed {
        return Err(ForecastError::TooShort {
            needed,
            got: x.len(),
        });
    }
    let s = config.seasonal_or_none();

    let mut level = series.clone();
    let mut differencing = Vec::new();
    for _ in 0..s.d {
        let (next, record) = difference(&level, s.s)?;
        differencing.push(record);
        level = next;
    }
    for _ in 0..config.order.d {
        let (next, record) = difference(&level, 1)?;
        differencing.push(record);
        level = next;
    }
    let w = level.complete_values()?;
    let layout = Layout::new(config);
    let w_mean = mean(&w);
    let scale = population_std(&w).max(1e-3 * w_mean.abs().max(1.0));
    let objective = Objective {
        layout,
        w: &w,
        mean: w_mean,
        scale,
    };

    let start = hannan_rissanen(&w, &layout, &objective);
    let nm = NelderMeadConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for restart in 0..RESTARTS {
        let x0: Vec<f64> = if restart == 0 {
            start.clone()
        } else {
            start
                .iter()
                .map(|v| v + rng.random_range(-0.2..0.2))
                .collect()
        };
        let result = nelder_mead(|p| objective.value(p), &x0, &nm);
        if result.fx.is_finite() && best.as_ref().is_none_or(|(_, f)| result.fx < *f) {
            best = Some((result.x, result.fx));
        }
    }
    let (xbest, _) = best.ok_or_else(|| {
        ForecastError::FitFailure(format!(
            "{}: objective not finite at any of {RESTARTS} starts",
            config.label()
        ))
    })?;

    let mut params = layout.unpack(&xbest, scale);
    let css = objective.css(&params);
    let n_effective = w.len() - layout.conditioning();
    params.sigma2 = (css / n_effective as f64).max(f64::MIN_POSITIVE);
    let (ar, ma) = rhs(&params.ar_poly(layout.s), &params.ma_poly(layout.s));
    let residuals = recursion_residuals(&w, w_mean, params.intercept, &ar, &ma);
    let aic = arima_aic(css, n_effective, config.parameter_count());
    Ok(FittedArima {
        config: config.clone(),
        params,
        differencing,
        css,
        aic,
        n_effective,
        working: w,
        working_mean: w_mean,
        residuals,
    })
}

/// `n ln(css/n) + 2(k + 1)`, the `+1` counting the innovation variance.
pub fn arima_aic(css: f64, n_effective: usize, k: usize) -> f64 {
    let n = n_effective as f64;
    n * (css.max(f64::MIN_POSITIVE) / n).ln() + 2.0 * (k as f64 + 1.0)
}

/// Two-stage regression start: a long autoregression supplies residual proxies,
/// then `w_t` is regressed on its own lags and the lagged proxies.
fn hannan_rissanen(w: &[f64], layout: &Layout, objective: &Objective<'_>) -> Vec<f64> {
    let n = w.len();
    let s = layout.s;
    let ar_lags: Vec<usize> = (1..=layout.p)
        .chain((1..=layout.sp).map(|j| j * s))
        .collect();
    let ma_lags: Vec<usize> = (1..=layout.q)
        .chain((1..=layout.sq).map(|j| j * s))
        .collect();
    let ar_reach = ar_lags.iter().copied().max().unwrap_or(0);
    let ma_reach = ma_lags.iter().copied().max().unwrap_or(0);

    let mut proxies = vec![0.0; n];
    let mut first_proxy = 0;
    if !ma_lags.is_empty() {
        let long = (ar_reach.max(ma_reach) + 2).min(n / 3).max(1);
        let rows: Vec<Vec<f64>> = (long..n)
            .map(|t| {
                std::iter::once(1.0)
                    .chain((1..=long).map(|k| w[t - k]))
                    .collect()
            })
            .collect();
        if let Ok(fit) = ols(&rows, &w[long..]) {
            proxies[long..].copy_from_slice(&fit.residuals);
            first_proxy = long;
        }
    }

    let start_t = ar_reach.max(first_proxy + ma_reach);
    let fallback = {
        let params = ArimaParams {
            phi: vec![0.0; layout.p],
            theta: vec![0.0; layout.q],
            seasonal_phi: vec![0.0; layout.sp],
            seasonal_theta: vec![0.0; layout.sq],
            intercept: if layout.intercept { mean(w) } else { 0.0 },
            sigma2: f64::NAN,
        };
        layout.pack(&params, objective.scale)
    };
    if layout.len() == 0 || start_t + layout.len() + 1 >= n {
        return fallback;
    }
    let rows: Vec<Vec<f64>> = (start_t..n)
        .map(|t| {
            let mut row = Vec::with_capacity(layout.len());
            if layout.intercept {
                row.push(1.0);
            }
            row.extend(ar_lags.iter().map(|&k| w[t - k]));
            row.extend(ma_lags.iter().map(|&k| proxies[t - k]));
            row
        })
        .collect();
    let Ok(fit) = ols(&rows, &w[start_t..]) else {
        return fallback;
    };
    // Regression order is (c, φ, Φ, θ, Θ); the optimizer wants (c, φ, θ, Φ, Θ).
    let mut it = fit.coefficients.into_iter();
    let intercept = if layout.intercept {
        it.next().unwrap()
    } else {
        0.0
    };
    let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
    let phi = take(layout.p);
    let seasonal_phi = take(layout.sp);
    let theta = take(layout.q);
    let seasonal_theta = take(layout.sq);
    let mut params = ArimaParams {
        phi,
        theta,
        seasonal_phi,
        seasonal_theta,
        intercept,
        sigma2: f64::NAN,
    };
    // Shrink toward zero until the start satisfies the root constraints.
    for _ in 0..20 {
        if objective.penalty(&params) == 0.0 {
            return layout.pack(&params, objective.scale);
        }
        for v in params
            .phi
            .iter_mut()
            .chain(&mut params.theta)
            .chain(&mut params.seasonal_phi)
            .chain(&mut params.seasonal_theta)
        {
            *v *= 0.5;
        }
    }
    fallback
}

impl FittedArima {
    fn rhs(&self) -> (Vec<f64>, Vec<f64>) {
        let s = self.config.seasonal_or_none().s.max(1);
        rhs(&self.params.ar_poly(s), &self.params.ma_poly(s))
    }

    /// Points lost to differencing at the start of the original series.
    pub fn differencing_loss(&self) -> usize {
        let s = self.config.seasonal_or_none();
        self.config.order.d + s.d * s.s
    }

    /// One-step-ahead in-sample predictions on the original scale, aligned to
    /// the input series; the first `differencing_loss()` entries are `None`.
    pub fn in_sample_predictions(&self, original: &[f64]) -> Vec<Option<f64>> {
        let lost = self.differencing_loss();
        (0..original.len())
            .map(|t| (t >= lost).then(|| original[t] - self.residuals[t - lost]))
            .collect()
    }

    /// Point forecasts of the working series, future shocks set to zero.
    pub fn forecast_working(&self, steps: usize) -> Vec<f64> {
        let (ar, ma) = self.rhs();
        let mut w = self.working.clone();
        let mut e = self.residuals.clone();
        for _ in 0..steps {
            let next = predict_next(&w, &e, self.working_mean, self.params.intercept, &ar, &ma);
            w.push(next);
            e.push(0.0);
        }
        w.split_off(self.working.len())
    }

    /// ψ-weights of the integrated model, which drive interval widths on the original scale.
    pub fn integrated_psi(&self, n: usize) -> Vec<f64> {
        let s = self.config.seasonal_or_none();
        let period = s.s.max(1);
        let ar = poly::multiply(
            &self.params.ar_poly(period),
            &poly::differencing_polynomial(self.config.order.d, s.d, period),
        );
        psi_weights(&ar, &self.params.ma_poly(period), n)
    }

    /// Forecasts on the original scale with Gaussian intervals.
    pub fn forecast(&self, steps: usize, confidence: f64) -> Result<PointForecast> {
        if steps == 0 {
            return Err(ForecastError::arg("horizon must be at least 1 step"));
        }
        let z = z_for_confidence(confidence)?;
        let mut points = self.forecast_working(steps);
        for record in self.differencing.iter().rev() {
            points = record.invert_values(&points);
        }
        let sigma = self.params.sigma2.sqrt();
        let psi = self.integrated_psi(steps);
        let mut acc = 0.0;
        let half: Vec<f64> = psi
            .iter()
            .map(|p| {
                acc += p * p;
                z * sigma * acc.sqrt()
            })
            .collect();
        let lower = points.iter().zip(&half).map(|(p, h)| p - h).collect();
        let upper = points.iter().zip(&half).map(|(p, h)| p + h).collect();
        Ok(PointForecast {
            points,
            intervals: Some((lower, upper)),
            confidence: Some(confidence),
        })
    }
}
