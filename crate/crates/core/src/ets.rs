//! Exponential smoothing: simple, Holt (additive trend) and Holt-Winters with
//! additive or multiplicative seasonality, additive errors.
//!
//! Additive Holt-Winters, with `m` the period:
//!
//! ```text
//! ŷ_{t|t-1} = ℓ_{t-1} + b_{t-1} + s_{t-m}
//! ℓ_t = α (y_t - s_{t-m}) + (1 - α)(ℓ_{t-1} + b_{t-1})
//! b_t = β (ℓ_t - ℓ_{t-1}) + (1 - β) b_{t-1}
//! s_t = γ (y_t - ℓ_{t-1} - b_{t-1}) + (1 - γ) s_{t-m}
//! ```
//!
//! The multiplicative form divides by (and multiplies with) the seasonal
//! factor instead. Smoothing parameters and initial states are estimated
//! jointly by minimizing the sum of squared one-step errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::model::PointForecast;
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::stats::{mean, population_std, z_for_confidence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendKind {
    None,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalKind {
    None,
    Additive,
    Multiplicative,
}

/// Which components to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EtsSpec {
    pub trend: TrendKind,
    pub seasonal: SeasonalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
}

impl EtsSpec {
    pub fn simple() -> Self {
        Self {
            trend: TrendKind::None,
            seasonal: SeasonalKind::None,
            period: None,
        }
    }

    pub fn holt() -> Self {
        Self {
            trend: TrendKind::Additive,
            ..Self::simple()
        }
    }

    pub fn holt_winters(seasonal: SeasonalKind, period: usize) -> Self {
        Self {
            trend: TrendKind::Additive,
            seasonal,
            period: Some(period),
        }
    }

    pub fn has_trend(&self) -> bool {
        self.trend == TrendKind::Additive
    }

    pub fn has_season(&self) -> bool {
        self.seasonal != SeasonalKind::None
    }

    /// Seasonal period, or 1 for non-seasonal specs.
    pub fn season_length(&self) -> usize {
        if self.has_season() {
            self.period.unwrap_or(1)
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.has_season() && self.period.is_none_or(|m| m < 2) {
            return Err(ForecastError::Config(
                "seasonal exponential smoothing needs a period of at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn min_length(&self) -> usize {
        if self.has_season() {
            2 * self.season_length() + 2
        } else {
            4
        }
    }

    pub fn label(&self) -> String {
        let t = if self.has_trend() { "A" } else { "N" };
        match self.seasonal {
            SeasonalKind::None => format!("ETS(A,{t},N)"),
            SeasonalKind::Additive => format!("ETS(A,{t},A)[{}]", self.season_length()),
            SeasonalKind::Multiplicative => format!("ETS(A,{t},M)[{}]", self.season_length()),
        }
    }
}

/// Smoothing parameters and initial states. `initial_seasonals` holds
/// s_{1-m}..s_0, i.e. the factors applied to the first `m` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtsParams {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub initial_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_trend: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_seasonals: Vec<f64>,
}

/// Components after the last observation. `seasonals[j]` applies to step `j + 1`
/// (and every `m` steps after).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtsState {
    pub level: f64,
    pub trend: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seasonals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEts {
    pub spec: EtsSpec,
    pub params: EtsParams,
    pub sse: f64,
    pub aic: f64,
    /// Free parameters counted by the AIC.
    pub k: usize,
    pub residuals: Vec<f64>,
    pub fitted_values: Vec<f64>,
    pub final_state: EtsState,
}

/// Values to hold fixed instead of estimating.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EtsFixed {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_trend: Option<f64>,
}

impl EtsFixed {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

struct Filtered {
    fitted: Vec<f64>,
    residuals: Vec<f64>,
    state: EtsState,
}

/// Runs the smoothing recursions over `y` with the given parameters.
fn run_filter(y: &[f64], spec: &EtsSpec, params: &EtsParams) -> Filtered {
    let m = spec.season_length();
    let alpha = params.alpha;
    let beta = params.beta.unwrap_or(0.0);
    let gamma = params.gamma.unwrap_or(0.0);
    let mut level = params.initial_level;
    let mut trend = if spec.has_trend() {
        params.initial_trend.unwrap_or(0.0)
    } else {
        0.0
    };
    let mut season = if spec.has_season() {
        params.initial_seasonals.clone()
    } else {
        Vec::new()
    };
    let mut fitted = Vec::with_capacity(y.len());
    let mut residuals = Vec::with_capacity(y.len());
    for (t, &obs) in y.iter().enumerate() {
        let base = level + trend;
        let (pred, new_level, new_season) = match spec.seasonal {
            SeasonalKind::None => (base, alpha * obs + (1.0 - alpha) * base, None),
            SeasonalKind::Additive => {
                let s = season[t % m];
                (
                    base + s,
                    alpha * (obs - s) + (1.0 - alpha) * base,
                    Some(gamma * (obs - base) + (1.0 - gamma) * s),
                )
            }
            SeasonalKind::Multiplicative => {
                let s = season[t % m];
                (
                    base * s,
                    alpha * (obs / s) + (1.0 - alpha) * base,
                    Some(gamma * (obs / base) + (1.0 - gamma) * s),
                )
            }
        };
        if spec.has_trend() {
            trend = beta * (new_level - level) + (1.0 - beta) * trend;
        }
        level = new_level;
        if let Some(s) = new_season {
            season[t % m] = s;
        }
        fitted.push(pred);
        residuals.push(obs - pred);
    }
    let n = y.len();
    let seasonals = if spec.has_season() {
        (0..m).map(|j| season[(n + j) % m]).collect()
    } else {
        Vec::new()
    };
    Filtered {
        fitted,
        residuals,
        state: EtsState {
            level,
            trend,
            seasonals,
        },
    }
}

/// `n ln(sse/n) + 2k`.
pub fn ets_aic(sse: f64, n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (sse.max(f64::MIN_POSITIVE) / n).ln() + 2.0 * k as f64
}

impl FittedEts {
    /// Evaluates fixed parameters on `y` without any estimation.
    pub fn from_params(y: &[f64], spec: EtsSpec, params: EtsParams) -> Result<Self> {
        spec.validate()?;
        check_params(&spec, &params)?;
        if y.is_empty() {
            return Err(ForecastError::TooShort { needed: 1, got: 0 });
        }
        check_domain(y, &spec)?;
        let f = run_filter(y, &spec, &params);
        let sse = f.residuals.iter().map(|r| r * r).sum();
        Ok(Self {
            spec,
            params,
            sse,
            aic: ets_aic(sse, y.len(), 0),
            k: 0,
            residuals: f.residuals,
            fitted_values: f.fitted,
            final_state: f.state,
        })
    }

    /// Point forecasts with Gaussian intervals from the additive-error
    /// state-space variance recursion. For multiplicative seasonality the
    /// variance uses the same recursion, which is an approximation.
    pub fn forecast(&self, steps: usize, confidence: f64) -> Result<PointForecast> {
        if steps == 0 {
            return Err(ForecastError::arg("horizon must be at least 1 step"));
        }
        let z = z_for_confidence(confidence)?;
        let st = &self.final_state;
        let m = self.spec.season_length();
        let points: Vec<f64> = (1..=steps)
            .map(|h| {
                let base = st.level + h as f64 * st.trend;
                match self.spec.seasonal {
                    SeasonalKind::None => base,
                    SeasonalKind::Additive => base + st.seasonals[(h - 1) % m],
                    SeasonalKind::Multiplicative => base * st.seasonals[(h - 1) % m],
                }
            })
            .collect();
        let sigma = (self.sse / self.residuals.len() as f64).sqrt();
        let alpha = self.params.alpha;
        let beta = self.params.beta.unwrap_or(0.0);
        let gamma = self.params.gamma.unwrap_or(0.0);
        let mut v = 1.0;
        let mut half = Vec::with_capacity(steps);
        for h in 1..=steps {
            if h > 1 {
                let j = (h - 1) as f64;
                let mut c = alpha;
                if self.spec.has_trend() {
                    c += alpha * beta * j;
                }
                if self.spec.has_season() && (h - 1) % m == 0 {
                    c += gamma;
                }
                v += c * c;
            }
            half.push(z * sigma * v.sqrt());
        }
        let lower = points.iter().zip(&half).map(|(p, w)| p - w).collect();
        let upper = points.iter().zip(&half).map(|(p, w)| p + w).collect();
        Ok(PointForecast {
            points,
            intervals: Some((lower, upper)),
            confidence: Some(confidence),
        })
    }
}

fn check_params(spec: &EtsSpec, p: &EtsParams) -> Result<()> {
    let unit = |name: &str, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(ForecastError::Config(format!(
                "{name} = {v} must lie in [0, 1]"
            )))
        }
    };
    unit("alpha", p.alpha)?;
    if spec.has_trend() {
        unit(
            "beta",
            p.beta
                .ok_or_else(|| ForecastError::Config("trend needs beta".into()))?,
        )?;
    }
    if spec.has_season() {
        unit(
            "gamma",
            p.gamma
                .ok_or_else(|| ForecastError::Config("season needs gamma".into()))?,
        )?;
        if p.initial_seasonals.len() != spec.season_length() {
            return Err(ForecastError::Config(format!(
                "expected {} initial seasonals, got {}",
                spec.season_length(),
                p.initial_seasonals.len()
            )));
        }
    }
    Ok(())
}

fn check_domain(y: &[f64], spec: &EtsSpec) -> Result<()> {
    if spec.seasonal == SeasonalKind::Multiplicative {
        if let Some(index) = y.iter().position(|&v| v <= 0.0) {
            return Err(ForecastError::Domain {
                index,
                message: format!(
                    "multiplicative seasonality needs positive data, found {}",
                    y[index]
                ),
            });
        }
    }
    Ok(())
}

/// Textbook starting states: level from the first period (or first four
/// points), trend from the change between the first two periods, seasonals
/// from detrended per-phase averages over the first two periods.
pub fn heuristic_initial_states(y: &[f64], spec: &EtsSpec) -> (f64, f64, Vec<f64>) {
    if !spec.has_season() {
        let k = y.len().min(4);
        let level = mean(&y[..k]);
        let trend = if !spec.has_trend() {
            0.0
        } else if y.len() >= 8 {
            (mean(&y[4..8]) - mean(&y[..4])) / 4.0
        } else {
            y[1] - y[0]
        };
        return (level, trend, Vec::new());
    }
    let m = spec.season_length();
    let first = mean(&y[..m]);
    let second = mean(&y[m..2 * m]);
    let level = first;
    let trend = if spec.has_trend() {
        (second - first) / m as f64
    } else {
        0.0
    };
    let mut seasonals: Vec<f64> = (0..m)
        .map(|j| match spec.seasonal {
            SeasonalKind::Multiplicative => (y[j] / first + y[m + j] / second) / 2.0,
            _ => ((y[j] - first) + (y[m + j] - second)) / 2.0,
        })
        .collect();
    let centre = mean(&seasonals);
    match spec.seasonal {
        SeasonalKind::Multiplicative => seasonals.iter_mut().for_each(|s| *s /= centre),
        _ => seasonals.iter_mut().for_each(|s| *s -= centre),
    }
    (level, trend, seasonals)
}

/// Maps between the optimizer's flat vector and full parameters.
struct Packing<'a> {
    spec: EtsSpec,
    fixed: &'a EtsFixed,
    level0: f64,
    trend0: f64,
    seasonals0: Vec<f64>,
    scale: f64,
}

const START_ALPHA: f64 = 0.3;
const START_BETA: f64 = 0.1;
const START_GAMMA: f64 = 0.1;

impl Packing<'_> {
    fn free_seasonals(&self) -> usize {
        if self.spec.has_season() {
            self.spec.season_length() - 1
        } else {
            0
        }
    }

    /// Initial vector and per-coordinate bounds.
    fn start(&self) -> (Vec<f64>, Vec<(f64, f64)>) {
        let unbounded = (f64::NEG_INFINITY, f64::INFINITY);
        let mut x = Vec::new();
        let mut bounds = Vec::new();
        if self.fixed.alpha.is_none() {
            x.push(START_ALPHA);
            bounds.push((0.0, 1.0));
        }
        if self.spec.has_trend() && self.fixed.beta.is_none() {
            x.push(START_BETA);
            bounds.push((0.0, 1.0));
        }
        if self.spec.has_season() && self.fixed.gamma.is_none() {
            x.push(START_GAMMA);
            bounds.push((0.0, 1.0));
        }
        if self.fixed.initial_level.is_none() {
            x.push(0.0);
            bounds.push(unbounded);
        }
        if self.spec.has_trend() && self.fixed.initial_trend.is_none() {
            x.push(0.0);
            bounds.push(unbounded);
        }
        for _ in 0..self.free_seasonals() {
            x.push(0.0);
            bounds.push(unbounded);
        }
        (x, bounds)
    }

    fn unpack(&self, x: &[f64]) -> EtsParams {
        let mut it = x.iter().copied();
        let alpha = self.fixed.alpha.unwrap_or_else(|| it.next().unwrap());
        let beta = self
            .spec
            .has_trend()
            .then(|| self.fixed.beta.unwrap_or_else(|| it.next().unwrap()));
        let gamma = self
            .spec
            .has_season()
            .then(|| self.fixed.gamma.unwrap_or_else(|| it.next().unwrap()));
        let initial_level = self
            .fixed
            .initial_level
            .unwrap_or_else(|| self.level0 + self.scale * it.next().unwrap());
        let trend_scale = self.scale / self.spec.season_length() as f64;
        let initial_trend = self.spec.has_trend().then(|| {
            self.fixed
                .initial_trend
                .unwrap_or_else(|| self.trend0 + trend_scale * it.next().unwrap())
        });
        let mut initial_seasonals = Vec::new();
        if self.spec.has_season() {
            let multiplicative = self.spec.seasonal == SeasonalKind::Multiplicative;
            let step = if multiplicative { 0.1 } else { self.scale };
            for j in 0..self.free_seasonals() {
                initial_seasonals.push(self.seasonals0[j] + step * it.next().unwrap());
            }
            let m = self.spec.season_length() as f64;
            let rest: f64 = initial_seasonals.iter().sum();
            initial_seasonals.push(if multiplicative { m - rest } else { -rest });
        }
        EtsParams {
            alpha,
            beta,
            gamma,
            initial_level,
            initial_trend,
            initial_seasonals,
        }
    }
}

/// Estimates smoothing parameters and initial states by least squares.
pub fn fit_ets(y: &[f64], spec: EtsSpec) -> Result<FittedEts> {
    fit_ets_with(y, spec, &EtsFixed::default())
}

/// Like [`fit_ets`], holding the values in `fixed` constant.
pub fn fit_ets_with(y: &[f64], spec: EtsSpec, fixed: &EtsFixed) -> Result<FittedEts> {
    spec.validate()?;
    let needed = spec.min_length();
    if y.len() < needed {
        return Err(ForecastError::TooShort {
            needed,
            got: y.len(),
        });
    }
    check_domain(y, &spec)?;
    for (name, v) in [
        ("alpha", fixed.alpha),
        ("beta", fixed.beta),
        ("gamma", fixed.gamma),
    ] {
        if let Some(v) = v {
            if !(0.0..=1.0).contains(&v) {
                return Err(ForecastError::Config(format!(
                    "{name} = {v} must lie in [0, 1]"
                )));
            }
        }
    }
    let (level0, trend0, seasonals0) = heuristic_initial_states(y, &spec);
    let spread = population_std(y);
    let scale = if spread > 0.0 {
        spread
    } else {
        1e-3 * mean(y).abs().max(1.0)
    };
    let packing = Packing {
        spec,
        fixed,
        level0,
        trend0,
        seasonals0,
        scale,
    };
    let objective = |x: &[f64]| -> f64 {
        let params = packing.unpack(x);
        let f = run_filter(y, &spec, &params);
        let sse: f64 = f.residuals.iter().map(|r| r * r).sum();
        if sse.is_finite() {
            sse
        } else {
            f64::INFINITY
        }
    };
    let (x0, bounds) = packing.start();
    let k = x0.len();
    let nm = NelderMeadConfig {
        max_iter: 5_000,
        bounds: Some(bounds),
        ..Default::default()
    };
    let first = nelder_mead(objective, &x0, &nm);
    // Restart from the first optimum to escape a collapsed simplex.
    let second = nelder_mead(objective, &first.x, &nm);
    let best = if second.fx <= first.fx { second } else { first };
    if !best.fx.is_finite() {
        return Err(ForecastError::FitFailure(format!(
            "{}: sum of squares is not finite",
            spec.label()
        )));
    }
    let params = packing.unpack(&best.x);
    let f = run_filter(y, &spec, &params);
    let sse = f.residuals.iter().map(|r| r * r).sum();
    Ok(FittedEts {
        spec,
        params,
        sse,
        aic: ets_aic(sse, y.len(), k),
        k,
        residuals: f.residuals,
        fitted_values: f.fitted,
        final_state: f.state,
    })
}

/// One candidate's outcome in [`select_ets`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtsCandidate {
    pub spec: EtsSpec,
    pub aic: f64,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Fits each candidate and ranks by AIC; ties go to fewer parameters, then spec order.
pub fn select_ets(y: &[f64], candidates: &[EtsSpec]) -> Result<Vec<EtsCandidate>> {
    if candidates.is_empty() {
        return Err(ForecastError::Selection(
            "no candidate specifications".into(),
        ));
    }
    let mut ranked: Vec<EtsCandidate> = candidates
        .par_iter()
        .map(|&spec| match fit_ets(y, spec) {
            Ok(fit) => EtsCandidate {
                spec,
                aic: fit.aic,
                k: fit.k,
                error: None,
            },
            Err(e) => EtsCandidate {
                spec,
                aic: f64::INFINITY,
                k: usize::MAX,
                error: Some(e.to_string()),
            },
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.aic
            .total_cmp(&b.aic)
            .then(a.k.cmp(&b.k))
            .then(a.spec.cmp(&b.spec))
    });
    if ranked.iter().all(|c| c.error.is_some()) {
        let causes = ranked
            .iter()
            .map(|c| format!("{}: {}", c.spec.label(), c.error.as_deref().unwrap_or("")))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ForecastError::Selection(format!(
            "no feasible candidate ({causes})"
        )));
    }
    Ok(ranked)
}

/// Candidate set used when the caller gives none.
pub fn default_candidates(period: Option<usize>) -> Vec<EtsSpec> {
    let mut c = vec![EtsSpec::simple(), EtsSpec::holt()];
    if let Some(m) = period.filter(|&m| m >= 2) {
        c.push(EtsSpec::holt_winters(SeasonalKind::Additive, m));
        c.push(EtsSpec::holt_winters(SeasonalKind::Multiplicative, m));
    }
    c
}
