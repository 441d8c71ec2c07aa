use std::sync::Arc;

use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use hybridcast::evaluate::{compare_models, format_leaderboard};
use hybridcast::model::DEFAULT_CONFIDENCE;
use hybridcast::preprocess::{apply_pipeline, PipelineStep};
use hybridcast::timeseries::{format_timestamp, ingest_csv};
use hybridcast::{ForecastError, ModelSpec, TimeSeries};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::jobs::{now, FitJob, JobStatus};
use crate::store::{digest, DatasetRecord};
use crate::{AppState, API_VERSION};

type ApiResult = Result<(StatusCode, Json<Value>), ApiError>;

/// Longest forecast horizon accepted in one request.
pub const MAX_HORIZON: usize = 10_000;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_CV_HORIZON: usize = 6;
pub const DEFAULT_THRESHOLD: f64 = 4.0;

fn versioned(status: StatusCode, mut body: Value) -> ApiResult {
    body["api_version"] = json!(API_VERSION);
    Ok((status, Json(body)))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("response types always serialize")
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker task failed: {e}")))?
}

fn load_dataset(app: &AppState, id: &str) -> Result<(DatasetRecord, TimeSeries), ApiError> {
    let record = app
        .store
        .dataset(id)?
        .ok_or_else(|| ApiError::not_found("dataset", id))?;
    let series = app
        .store
        .dataset_series(id)?
        .ok_or_else(|| ApiError::not_found("dataset", id))?;
    Ok((record, series))
}

fn load_job(app: &AppState, id: &str) -> Result<FitJob, ApiError> {
    app.store
        .job(id)?
        .ok_or_else(|| ApiError::not_found("model", id))
}

fn record_for(series: &TimeSeries, id: String, name: String) -> DatasetRecord {
    DatasetRecord {
        id,
        name,
        created_at: now(),
        row_count: series.len(),
        missing_count: series.missing_count(),
        frequency: series.frequency(),
        first_timestamp: series.first_timestamp(),
        last_timestamp: series.last_timestamp(),
        parent: None,
        pipeline: Vec::new(),
        transforms: Vec::new(),
    }
}

fn created_or_ok(created: bool) -> StatusCode {
    if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    }
}

#[derive(Debug, Deserialize)]
pub struct UploadQuery {
    #[serde(default = "default_timestamp_column")]
    timestamp_column: String,
    #[serde(default = "default_value_column")]
    value_column: String,
}

fn default_timestamp_column() -> String {
    "timestamp".into()
}

fn default_value_column() -> String {
    "value".into()
}

pub async fn upload_dataset(
    State(app): State<Arc<AppState>>,
    Query(q): Query<UploadQuery>,
    mut multipart: Multipart,
) -> ApiResult {
    let multipart_error = |e: axum::extract::multipart::MultipartError| {
        let status = e.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload_too_large"
        } else {
            "bad_multipart"
        };
        ApiError::new(status, code, e.body_text())
    };
    let mut upload = None;
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        if field.name() == Some("file") {
            let name = field.file_name().unwrap_or("dataset").to_string();
            let bytes = field.bytes().await.map_err(multipart_error)?;
            upload = Some((name, bytes));
            break;
        }
    }
    let (name, bytes) = upload.ok_or_else(|| {
        ApiError::bad_request("missing_file", "multipart form has no 'file' field")
    })?;

    let store_app = app.clone();
    let (record, created) = blocking(move || {
        let series = ingest_csv(bytes.as_ref(), &q.timestamp_column, &q.value_column)
            .map_err(|e| ApiError::from_engine(StatusCode::BAD_REQUEST, &e))?;
        let canonical = series.to_csv();
        let id = digest(&[canonical.as_bytes()]);
        let record = record_for(&series, id, name);
        Ok(store_app.store.put_dataset(record, &series)?)
    })
    .await?;
    tracing::info!(dataset = %record.id, created, "upload");
    versioned(created_or_ok(created), to_value(&record))
}

pub async fn list_datasets(State(app): State<Arc<AppState>>) -> ApiResult {
    let datasets = app.store.datasets()?;
    versioned(StatusCode::OK, json!({ "datasets": datasets }))
}

pub async fn get_dataset(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let (record, series) = load_dataset(&app, &id)?;
    let observations: Vec<Value> = series
        .timestamps()
        .iter()
        .zip(series.values())
        .map(|(t, v)| json!({"timestamp": t, "time": format_timestamp(*t), "value": v}))
        .collect();
    let mut body = to_value(&record);
    body["observations"] = Value::Array(observations);
    versioned(StatusCode::OK, body)
}

fn parse_pipeline(body: Value) -> Result<Vec<PipelineStep>, ApiError> {
    let raw = match body {
        Value::Array(steps) => steps,
        Value::Object(mut map) => match map.remove("pipeline") {
            Some(Value::Array(steps)) => steps,
            _ => {
                return Err(ApiError::unprocessable(
                    "invalid_pipeline",
                    "body needs a 'pipeline' array",
                ))
            }
        },
        _ => {
            return Err(ApiError::unprocessable(
                "invalid_pipeline",
                "body needs a 'pipeline' array",
            ))
        }
    };
    if raw.is_empty() {
        return Err(ApiError::unprocessable(
            "empty_pipeline",
            "pipeline has no steps",
        ));
    }
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v).map_err(|e| {
                ApiError::unprocessable("invalid_step", format!("step {i}: {e}")).at_step(i)
            })
        })
        .collect()
}

pub async fn preprocess_dataset(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<Value>,
) -> ApiResult {
    let (parent, series) = load_dataset(&app, &id)?;
    let steps = parse_pipeline(body)?;
    let store_app = app.clone();
    let (record, created) = blocking(move || {
        let (derived, applied) = apply_pipeline(&series, &steps).map_err(|e| {
            ApiError::from_engine(StatusCode::UNPROCESSABLE_ENTITY, &e.source).at_step(e.step)
        })?;
        let canonical = derived.to_csv();
        let pipeline_json = serde_json::to_string(&steps).expect("pipeline steps always serialize");
        let derived_id = digest(&[
            canonical.as_bytes(),
            parent.id.as_bytes(),
            pipeline_json.as_bytes(),
        ]);
        let ops: Vec<String> = steps.iter().map(step_name).collect();
        let mut record = record_for(
            &derived,
            derived_id,
            format!("{} [{}]", parent.name, ops.join(", ")),
        );
        record.parent = Some(parent.id.clone());
        record.transforms = parent.transforms.clone();
        record
            .transforms
            .extend(applied.iter().filter_map(|a| a.record.clone()));
        record.pipeline = applied;
        Ok(store_app.store.put_dataset(record, &derived)?)
    })
    .await?;
    versioned(created_or_ok(created), to_value(&record))
}

fn step_name(step: &PipelineStep) -> String {
    match step {
        PipelineStep::Impute { .. } => "impute".into(),
        PipelineStep::Outliers { .. } => "outliers".into(),
        PipelineStep::Log => "log".into(),
        PipelineStep::Difference { lag } => format!("difference({lag})"),
        PipelineStep::Normalize { .. } => "normalize".into(),
    }
}

fn parse_spec(v: Value, index: Option<usize>) -> Result<ModelSpec, ApiError> {
    let at = index.map(|i| format!("spec {i}: ")).unwrap_or_default();
    let spec: ModelSpec = serde_json::from_value(v)
        .map_err(|e| ApiError::unprocessable("invalid_spec", format!("{at}{e}")))?;
    spec.validate()
        .map_err(|e| ApiError::unprocessable("invalid_spec", format!("{at}{e}")))?;
    Ok(spec)
}

#[derive(Debug, Deserialize)]
pub struct FitRequest {
    dataset_id: String,
    spec: Value,
}

pub async fn submit_fit(
    State(app): State<Arc<AppState>>,
    Json(req): Json<FitRequest>,
) -> ApiResult {
    if app.store.dataset(&req.dataset_id)?.is_none() {
        return Err(ApiError::not_found("dataset", &req.dataset_id));
    }
    let spec = parse_spec(req.spec, None)?;
    let job = FitJob::new(&req.dataset_id, spec);
    app.store.put_job(&job)?;
    app.queue.submit(&job.id);
    tracing::info!(job = %job.id, dataset = %job.dataset_id, "queued");
    versioned(StatusCode::ACCEPTED, to_value(&job))
}

pub async fn get_job(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    versioned(StatusCode::OK, to_value(&load_job(&app, &id)?))
}

pub async fn list_jobs(State(app): State<Arc<AppState>>) -> ApiResult {
    let mut jobs = app.store.jobs()?;
    jobs.sort_by(|a, b| {
        a.submitted_at
            .cmp(&b.submitted_at)
            .then_with(|| a.id.cmp(&b.id))
    });
    versioned(StatusCode::OK, json!({ "models": jobs }))
}

fn require_done(job: &FitJob) -> Result<(), ApiError> {
    if job.status != JobStatus::Done {
        let status = serde_json::to_value(job.status).expect("status serializes");
        return Err(ApiError::conflict(
            "job_not_done",
            format!(
                "model job {} is {}",
                job.id,
                status.as_str().unwrap_or("unknown")
            ),
        ));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
pub struct ForecastRequest {
    horizon: i64,
    #[serde(default)]
    confidence: Option<f64>,
}

pub async fn forecast(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<ForecastRequest>,
) -> ApiResult {
    let job = load_job(&app, &id)?;
    require_done(&job)?;
    if req.horizon < 1 || req.horizon as usize > MAX_HORIZON {
        return Err(ApiError::unprocessable(
            "invalid_horizon",
            format!(
                "horizon must be between 1 and {MAX_HORIZON}, got {}",
                req.horizon
            ),
        ));
    }
    let confidence = req.confidence.unwrap_or(DEFAULT_CONFIDENCE);
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(ApiError::unprocessable(
            "invalid_confidence",
            format!("confidence must lie strictly between 0 and 1, got {confidence}"),
        ));
    }
    let record = app
        .store
        .dataset(&job.dataset_id)?
        .ok_or_else(|| ApiError::not_found("dataset", &job.dataset_id))?;
    let model = app
        .store
        .model(&id)?
        .ok_or_else(|| ApiError::internal("fitted model file is missing"))?;
    let forecast = blocking(move || {
        model
            .forecast(req.horizon as usize, confidence)
            .map(|f| f.inverted_through(&record.transforms))
            .map_err(|e| ApiError::from_engine(StatusCode::UNPROCESSABLE_ENTITY, &e))
    })
    .await?;
    let mut body = to_value(&forecast);
    body["model_id"] = json!(job.id);
    body["dataset_id"] = json!(job.dataset_id);
    body["label"] = json!(job.spec.label());
    versioned(StatusCode::OK, body)
}

#[derive(Debug, Deserialize)]
pub struct CompareRequest {
    dataset_id: String,
    specs: Vec<Value>,
    #[serde(default = "default_folds")]
    folds: usize,
    #[serde(default = "default_cv_horizon")]
    horizon: usize,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_cv_horizon() -> usize {
    DEFAULT_CV_HORIZON
}

pub async fn compare(
    State(app): State<Arc<AppState>>,
    Json(req): Json<CompareRequest>,
) -> ApiResult {
    let (_, series) = load_dataset(&app, &req.dataset_id)?;
    if req.specs.is_empty() {
        return Err(ApiError::unprocessable(
            "empty_specs",
            "comparison needs at least one spec",
        ));
    }
    let specs = req
        .specs
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_spec(v, Some(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let (folds, horizon) = (req.folds, req.horizon);
    let reports = blocking(move || {
        compare_models(&series, &specs, folds, horizon).map_err(|e| match e {
            ForecastError::Comparison(_) => {
                ApiError::from_engine(StatusCode::INTERNAL_SERVER_ERROR, &e)
            }
            _ => ApiError::from_engine(StatusCode::UNPROCESSABLE_ENTITY, &e),
        })
    })
    .await?;
    let rows: Vec<Value> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let m = r.aggregate.as_ref();
            json!({
                "rank": i + 1,
                "model": r.model,
                "digest": r.digest,
                "mae": m.map(|m| m.mae),
                "mse": m.map(|m| m.mse),
                "rmse": m.map(|m| m.rmse),
                "mape": m.and_then(|m| m.mape),
                "error": r.error,
            })
        })
        .collect();
    versioned(
        StatusCode::OK,
        json!({
            "dataset_id": req.dataset_id,
            "folds": folds,
            "horizon": horizon,
            "rows": rows,
            "table": format_leaderboard(&reports),
            "reports": reports,
        }),
    )
}

#[derive(Debug, Deserialize)]
pub struct AnomalyQuery {
    model: Option<String>,
    threshold: Option<f64>,
}

pub async fn anomalies(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<AnomalyQuery>,
) -> ApiResult {
    let (_, series) = load_dataset(&app, &id)?;
    let model_id = q.model.ok_or_else(|| {
        ApiError::unprocessable("missing_model", "query parameter 'model' is required")
    })?;
    let threshold = q.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(ApiError::unprocessable(
            "invalid_threshold",
            format!("threshold must be a positive number, got {threshold}"),
        ));
    }
    let job = load_job(&app, &model_id)?;
    if job.dataset_id != id {
        return Err(ApiError::conflict(
            "dataset_mismatch",
            format!(
                "model {model_id} was fitted on dataset {}, not {id}",
                job.dataset_id
            ),
        ));
    }
    require_done(&job)?;
    let model = app
        .store
        .model(&model_id)?
        .ok_or_else(|| ApiError::internal("fitted model file is missing"))?;
    let events = blocking(move || {
        model
            .anomalies(&series, threshold)
            .map_err(|e| ApiError::from_engine(StatusCode::UNPROCESSABLE_ENTITY, &e))
    })
    .await?;
    versioned(
        StatusCode::OK,
        json!({
            "dataset_id": id,
            "model_id": model_id,
            "threshold": threshold,
            "events": events,
        }),
    )
}
