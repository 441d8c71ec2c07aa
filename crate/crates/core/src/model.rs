//! Family-independent model specifications, fitted models and forecasts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arima::{fit_arima, ArimaConfig, FittedArima};
use crate::error::{ForecastError, Result};
use crate::ets::{fit_ets_with, EtsFixed, EtsSpec, FittedEts};
use crate::evaluate::{detect_anomalies, AnomalyEvent, FoldModel};
use crate::lstm::{fit_lstm, FittedLstm, LstmConfig};
use crate::preprocess::{apply_pipeline, invert_forecast, PipelineStep, TransformRecord};
use crate::timeseries::TimeSeries;

/// Version of the serialized [`FittedModel`] document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Default interval confidence.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Forecast values on the model's own scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PointForecast {
    pub points: Vec<f64>,
    pub intervals: Option<(Vec<f64>, Vec<f64>)>,
    pub confidence: Option<f64>,
}

/// Family-specific configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    Arima(ArimaConfig),
    Sarima(ArimaConfig),
    Ets {
        spec: EtsSpec,
        #[serde(default, skip_serializing_if = "EtsFixed::is_empty")]
        fixed: EtsFixed,
    },
    Lstm(LstmConfig),
}

/// What to fit, including preprocessing applied before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: ModelFamily,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preprocess: Vec<PipelineStep>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        Self {
            family,
            preprocess: Vec::new(),
        }
    }

    pub fn with_preprocess(mut self, steps: Vec<PipelineStep>) -> Self {
        self.preprocess = steps;
        self
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            ModelFamily::Arima(_) => "arima",
            ModelFamily::Sarima(_) => "sarima",
            ModelFamily::Ets { .. } => "ets",
            ModelFamily::Lstm(_) => "lstm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            ModelFamily::Arima(c) => {
                if c.seasonal.is_some_and(|s| s.p + s.d + s.q > 0) {
                    return Err(ForecastError::Config(
                        "family arima takes no seasonal order; use sarima".into(),
                    ));
                }
                c.validate()
            }
            ModelFamily::Sarima(c) => {
                if c.seasonal.is_none() {
                    return Err(ForecastError::Config(
                        "family sarima needs a seasonal order".into(),
                    ));
                }
                c.validate()
            }
            ModelFamily::Ets { spec, .. } => spec.validate(),
            ModelFamily::Lstm(c) => c.validate(),
        }
    }

    pub fn label(&self) -> String {
        match &self.family {
            ModelFamily::Arima(c) | ModelFamily::Sarima(c) => c.label(),
            ModelFamily::Ets { spec, .. } => spec.label(),
            ModelFamily::Lstm(c) => c.label(),
        }
    }

    /// Canonical serialization: compact JSON with fields in declaration order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("model specs always serialize")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Points lost to differencing steps in the preprocessing pipeline.
    fn preprocess_loss(&self) -> usize {
        self.preprocess
            .iter()
            .map(|s| match s {
                PipelineStep::Difference { lag } => *lag,
                _ => 0,
            })
            .sum()
    }

    /// Shortest input series the spec can be fitted on.
    pub fn min_length(&self) -> usize {
        let family = match &self.family {
            ModelFamily::Arima(c) | ModelFamily::Sarima(c) => c.min_length(),
            ModelFamily::Ets { spec, .. } => spec.min_length(),
            ModelFamily::Lstm(c) => c.window + 1,
        };
        family + self.preprocess_loss()
    }
}

/// The family-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedFamily {
    Arima(FittedArima),
    Ets(FittedEts),
    Lstm(FittedLstm),
}

/// A fitted model plus everything needed to forecast in the units of the
/// series it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub spec_digest: String,
    pub label: String,
    /// Records from the spec's preprocessing, in application order.
    pub records: Vec<TransformRecord>,
    pub last_timestamp: i64,
    pub frequency: i64,
    pub n_obs: usize,
    pub fitted: FittedFamily,
}

/// One future step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastStep {
    pub timestamp: i64,
    pub point: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// Timestamp of the last observation the forecast starts from.
    pub origin: i64,
    pub steps: Vec<ForecastStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub intervals_available: bool,
    pub spec_digest: String,
}

impl Forecast {
    pub fn points(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.point).collect()
    }

    /// Maps the forecast back through `records` (applied in order), e.g. a
    /// dataset's own preprocessing pipeline.
    pub fn inverted_through(&self, records: &[TransformRecord]) -> Forecast {
        let points = self.points();
        let bounds: Option<(Vec<f64>, Vec<f64>)> = if self.intervals_available {
            Some(
                self.steps
                    .iter()
                    .map(|s| (s.lower.unwrap_or(s.point), s.upper.unwrap_or(s.point)))
                    .unzip(),
            )
        } else {
            None
        };
        let inv = invert_forecast(
            records.iter(),
            &points,
            bounds.as_ref().map(|(l, u)| (l.as_slice(), u.as_slice())),
        );
        build_forecast(
            self.origin,
            self.steps.iter().map(|s| s.timestamp).collect(),
            inv.points,
            inv.bounds,
            self.confidence,
            self.spec_digest.clone(),
        )
    }
}

fn build_forecast(
    origin: i64,
    timestamps: Vec<i64>,
    points: Vec<f64>,
    bounds: Option<(Vec<f64>, Vec<f64>)>,
    confidence: Option<f64>,
    spec_digest: String,
) -> Forecast {
    let available = bounds.is_some();
    let steps = timestamps
        .into_iter()
        .zip(points)
        .enumerate()
        .map(|(i, (timestamp, point))| ForecastStep {
            timestamp,
            point,
            lower: bounds.as_ref().map(|(l, _)| l[i]),
            upper: bounds.as_ref().map(|(_, u)| u[i]),
        })
        .collect();
    Forecast {
        origin,
        steps,
        confidence: if available { confidence } else { None },
        intervals_available: available,
        spec_digest,
    }
}

/// Applies the spec's preprocessing, then fits its family.
pub fn fit_model(series: &TimeSeries, spec: &ModelSpec) -> Result<FittedModel> {
    spec.validate()?;
    let (working, records) = if spec.preprocess.is_empty() {
        (series.clone(), Vec::new())
    } else {
        let (s, applied) =
            apply_pipeline(series, &spec.preprocess).map_err(|e| match e.source {
                ForecastError::Domain { .. } | ForecastError::DegenerateRange(_) => e.source,
                other => ForecastError::Data(format!("preprocessing step {}: {other}", e.step)),
            })?;
        (s, applied.into_iter().filter_map(|a| a.record).collect())
    };
    let values = working.complete_values()?;
    let fitted = match &spec.family {
        ModelFamily::Arima(c) | ModelFamily::Sarima(c) => {
            FittedFamily::Arima(fit_arima(&working, c)?)
        }
        ModelFamily::Ets { spec: ets, fixed } => {
            FittedFamily::Ets(fit_ets_with(&values, *ets, fixed)?)
        }
        ModelFamily::Lstm(c) => FittedFamily::Lstm(fit_lstm(&values, c)?),
    };
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        spec_digest: spec.digest(),
        label: spec.label(),
        records,
        last_timestamp: working.last_timestamp(),
        frequency: working.frequency(),
        n_obs: series.len(),
        fitted,
    })
}

impl FittedModel {
    /// Forecast `steps` ahead in the units of the fitting series.
    /// LSTM forecasts never carry intervals.
    pub fn forecast(&self, steps: usize, confidence: f64) -> Result<Forecast> {
        if steps == 0 {
            return Err(ForecastError::arg("horizon must be at least 1 step"));
        }
        let raw = match &self.fitted {
            FittedFamily::Arima(m) => m.forecast(steps, confidence)?,
            FittedFamily::Ets(m) => m.forecast(steps, confidence)?,
            FittedFamily::Lstm(m) => m.forecast(steps)?,
        };
        let inv = invert_forecast(
            self.records.iter(),
            &raw.points,
            raw.intervals
                .as_ref()
                .map(|(l, u)| (l.as_slice(), u.as_slice())),
        );
        let timestamps = (1..=steps as i64)
            .map(|h| self.last_timestamp + h * self.frequency)
            .collect();
        Ok(build_forecast(
            self.last_timestamp,
            timestamps,
            inv.points,
            inv.bounds,
            raw.confidence,
            self.spec_digest.clone(),
        ))
    }

    /// One-step-ahead in-sample predictions aligned to `series`, which must be
    /// the series the model was fitted on. Entries without a prediction are `None`.
    pub fn in_sample_predictions(&self, series: &TimeSeries) -> Result<Vec<Option<f64>>> {
        if series.len() != self.n_obs {
            return Err(ForecastError::arg(format!(
                "model was fitted on {} points, series has {}",
                self.n_obs,
                series.len()
            )));
        }
        // Rebuild every intermediate series so predictions can be mapped back stage by stage.
        let mut stages = vec![series.clone()];
        let mut stage_records = Vec::new();
        for step in &self.spec.preprocess {
            let last = stages.last().expect("at least the input stage");
            let (next, applied) =
                apply_pipeline(last, std::slice::from_ref(step)).map_err(|e| e.source)?;
            stage_records.push(applied.into_iter().next().and_then(|a| a.record));
            stages.push(next);
        }
        let working = stages.last().expect("at least the input stage");
        let values = working.complete_values()?;
        let mut preds = match &self.fitted {
            FittedFamily::Arima(m) => m.in_sample_predictions(&values),
            FittedFamily::Ets(m) => m.fitted_values.iter().copied().map(Some).collect(),
            FittedFamily::Lstm(m) => m.in_sample_predictions(),
        };
        if preds.len() != values.len() {
            return Err(ForecastError::arg("series does not match the fitted model"));
        }
        for (j, record) in stage_records.iter().enumerate().rev() {
            let below = stages[j].complete_values()?;
            preds = match record {
                None => preds,
                Some(TransformRecord::Difference { lag, .. }) => {
                    let lag = *lag;
                    (0..below.len())
                        .map(|t| {
                            if t < lag {
                                None
                            } else {
                                preds[t - lag].map(|d| below[t - lag] + d)
                            }
                        })
                        .collect()
                }
                Some(r) => preds
                    .into_iter()
                    .map(|p| p.map(|v| r.invert_values(&[v])[0]))
                    .collect(),
            };
        }
        Ok(preds)
    }

    /// Residual-based anomalies over the series the model was fitted on.
    pub fn anomalies(&self, series: &TimeSeries, threshold: f64) -> Result<Vec<AnomalyEvent>> {
        let expected = self.in_sample_predictions(series)?;
        detect_anomalies(
            series.timestamps(),
            &series.complete_values()?,
            &expected,
            threshold,
        )
    }

    /// Fit diagnostics: information criteria or training losses.
    pub fn summary(&self) -> serde_json::Value {
        use serde_json::json;
        let mut v = match &self.fitted {
            FittedFamily::Arima(m) => json!({
                "css": m.css,
                "aic": m.aic,
                "n_effective": m.n_effective,
                "parameters": m.params,
            }),
            FittedFamily::Ets(m) => json!({
                "sse": m.sse,
                "aic": m.aic,
                "parameters": m.params,
            }),
            FittedFamily::Lstm(m) => json!({
                "final_train_loss": m.report.train_loss.last(),
                "epochs": m.report.train_loss.len(),
                "training_report": m.report,
            }),
        };
        v["family"] = json!(self.spec.family_name());
        v["label"] = json!(self.label);
        v["spec_digest"] = json!(self.spec_digest);
        v
    }

    /// Drops wall-clock timings so serialized output is reproducible.
    pub fn without_timing(mut self) -> Self {
        if let FittedFamily::Lstm(m) = &mut self.fitted {
            m.report.wall_clock_ms = None;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and checks a serialized model.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: FittedModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ForecastError::Serialization(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        if model.spec_digest != model.spec.digest() {
            return Err(ForecastError::Serialization(
                "spec digest does not match the spec".into(),
            ));
        }
        if model.frequency <= 0 {
            return Err(ForecastError::Serialization(
                "frequency must be positive".into(),
            ));
        }
        if let FittedFamily::Lstm(m) = &model.fitted {
            m.weights
                .validate(&m.config)
                .map_err(|e| ForecastError::Serialization(e.to_string()))?;
            if m.tail.len() != m.config.window {
                return Err(ForecastError::Serialization(
                    "stored window has the wrong length".into(),
                ));
            }
        }
        Ok(model)
    }
}

impl FoldModel for ModelSpec {
    fn label(&self) -> String {
        ModelSpec::label(self)
    }

    fn digest(&self) -> String {
        ModelSpec::digest(self)
    }

    fn min_train_len(&self) -> usize {
        self.min_length()
    }

    fn fit_forecast(&self, train: &TimeSeries, horizon: usize) -> Result<Vec<f64>> {
        Ok(fit_model(train, self)?
            .forecast(horizon, DEFAULT_CONFIDENCE)?
            .points())
    }
}
