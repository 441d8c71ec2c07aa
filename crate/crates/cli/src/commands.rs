use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use hybridcast::arima::{ArimaConfig, ArimaOrder, SeasonalOrder};
use hybridcast::ets::{EtsFixed, EtsSpec, SeasonalKind, TrendKind};
use hybridcast::evaluate::{compare_models, format_leaderboard, EvaluationReport};
use hybridcast::lstm::LstmConfig;
use hybridcast::model::{fit_model, ModelFamily};
use hybridcast::preprocess::{apply_pipeline, PipelineStep};
use hybridcast::synth::{generate, SynthConfig};
use hybridcast::timeseries::{format_timestamp, ingest_csv};
use hybridcast::{FittedModel, Forecast, ForecastError, ModelSpec, TimeSeries};
use hybridcast_service::{serve, ServiceConfig};
use serde_json::{json, Value};

use crate::args::*;
use crate::steps::parse_step;
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Reads an input file; a path that does not exist is a usage error.
fn read_input(path: &Path, what: &str) -> Result<Vec<u8>, CliError> {
    if !path.exists() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    fs::read(path).map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Failure(format!("cannot write output: {e}")))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("outputs always serialize");
    s.push('\n');
    s
}

fn load_series(input: &InputArgs) -> Result<TimeSeries, CliError> {
    let bytes = read_input(&input.input, "input")?;
    Ok(ingest_csv(
        bytes.as_slice(),
        &input.timestamp_column,
        &input.value_column,
    )?)
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut config = match a.kind {
        SynthKindArg::Seasonal => SynthConfig::seasonal(a.n, a.period.unwrap_or(12), a.seed),
        SynthKindArg::Traffic => SynthConfig::traffic(a.n, a.seed),
    };
    if let Some(p) = a.period {
        config.period = p;
    }
    if let Some(s) = a.noise {
        config.noise = s;
    }
    if let Some(k) = a.spikes {
        config.spikes = k;
    }
    let out = generate(&config).map_err(|e| usage(e.to_string()))?;
    let text = match a.format {
        Format::Structured => pretty(&json!({
            "timestamps": out.series.timestamps(),
            "values": out.series.values(),
            "spikes": out.spikes,
        })),
        _ => out.series.to_csv(),
    };
    match a.out {
        Some(path) => write_file(&path, &text),
        None => emit(&text),
    }
}

fn parse_steps(raw: &[String]) -> Result<Vec<PipelineStep>, CliError> {
    raw.iter().map(|s| parse_step(s).map_err(usage)).collect()
}

pub fn preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let mut steps = Vec::new();
    if let Some(path) = &a.pipeline {
        let text = read_input(path, "pipeline file")?;
        let parsed: Vec<PipelineStep> = serde_json::from_slice(&text)
            .map_err(|e| usage(format!("invalid pipeline file: {e}")))?;
        steps.extend(parsed);
    }
    steps.extend(parse_steps(&a.steps)?);
    if steps.is_empty() {
        return Err(usage("give at least one --step or a --pipeline file"));
    }
    let series = load_series(&a.input)?;
    let (out, applied) =
        apply_pipeline(&series, &steps).map_err(|e| CliError::Failure(e.to_string()))?;
    if let Some(path) = &a.records_out {
        write_file(path, &pretty(&applied))?;
    }
    match &a.out {
        Some(path) => write_file(path, &out.to_csv()),
        None => emit(&out.to_csv()),
    }
}

fn spec_from_flags(a: &SpecArgs) -> Result<ModelSpec, CliError> {
    if let Some(path) = &a.spec {
        let text = read_input(path, "spec file")?;
        let spec: ModelSpec =
            serde_json::from_slice(&text).map_err(|e| usage(format!("invalid spec file: {e}")))?;
        spec.validate().map_err(|e| usage(e.to_string()))?;
        return Ok(spec);
    }
    let family = a.family.ok_or_else(|| usage("--family is required"))?;
    let order = ArimaOrder::new(a.p, a.d, a.q);
    let arima = |seasonal: Option<SeasonalOrder>| {
        let mut c = ArimaConfig::new(order, seasonal);
        if let Some(i) = a.intercept {
            c = c.with_intercept(i);
        }
        c.seed = a.seed;
        c
    };
    let family = match family {
        FamilyArg::Arima => ModelFamily::Arima(arima(None)),
        FamilyArg::Sarima => {
            let s = a
                .period
                .ok_or_else(|| usage("--period is required for sarima"))?;
            ModelFamily::Sarima(arima(Some(SeasonalOrder::new(
                a.seasonal_p,
                a.seasonal_d,
                a.seasonal_q,
                s,
            ))))
        }
        FamilyArg::Ets => {
            let seasonal = match a.seasonal {
                SeasonalArg::None => SeasonalKind::None,
                SeasonalArg::Additive => SeasonalKind::Additive,
                SeasonalArg::Multiplicative => SeasonalKind::Multiplicative,
            };
            let spec = EtsSpec {
                trend: match a.trend {
                    TrendArg::None => TrendKind::None,
                    TrendArg::Additive => TrendKind::Additive,
                },
                seasonal,
                period: if seasonal == SeasonalKind::None {
                    None
                } else {
                    a.period
                },
            };
            let fixed = EtsFixed {
                alpha: a.alpha,
                ..Default::default()
            };
            ModelFamily::Ets { spec, fixed }
        }
        FamilyArg::Lstm => {
            let d = LstmConfig::default();
            ModelFamily::Lstm(LstmConfig {
                layers: a.layers.unwrap_or(d.layers),
                hidden_units: a.hidden_units.unwrap_or(d.hidden_units),
                window: a
                    .window
                    .unwrap_or_else(|| LstmConfig::default_window(a.period)),
                dropout: a.dropout.unwrap_or(d.dropout),
                learning_rate: a.learning_rate.unwrap_or(d.learning_rate),
                epochs: a.epochs.unwrap_or(d.epochs),
                batch_size: a.batch_size.unwrap_or(d.batch_size),
                seed: a.seed,
                clip_norm: d.clip_norm,
            })
        }
    };
    let spec = ModelSpec::new(family).with_preprocess(parse_steps(&a.preprocess)?);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn key_value_rows(summary: &Value) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    if let Value::Object(map) = summary {
        for key in [
            "family",
            "label",
            "spec_digest",
            "aic",
            "css",
            "sse",
            "n_effective",
            "epochs",
            "final_train_loss",
        ] {
            if let Some(v) = map.get(key) {
                rows.push((key.to_string(), scalar(v)));
            }
        }
        if let Some(p) = map.get("parameters") {
            rows.push(("parameters".into(), p.to_string()));
        }
    }
    rows
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn fit(a: FitArgs) -> Result<(), CliError> {
    let spec = spec_from_flags(&a.spec)?;
    let series = load_series(&a.input)?;
    let model = fit_model(&series, &spec)?.without_timing();
    write_file(&a.out, &model.to_json()?)?;
    let summary = model.summary();
    let text = match a.format {
        Format::Structured => pretty(&summary),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            for (k, v) in key_value_rows(&summary) {
                s.push_str(&format!("{k},{}\n", csv_field(&v)));
            }
            s
        }
        Format::Table => {
            let rows = key_value_rows(&summary);
            let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut s: String = rows
                .iter()
                .map(|(k, v)| format!("{k:<w$}  {v}\n"))
                .collect();
            s.push_str(&format!("{:<w$}  {}\n", "model_file", a.out.display()));
            s
        }
    };
    emit(&text)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn forecast_csv(f: &Forecast) -> String {
    let mut s = String::from("timestamp,point,lower,upper\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for step in &f.steps {
        s.push_str(&format!(
            "{},{},{},{}\n",
            format_timestamp(step.timestamp),
            step.point,
            opt(step.lower),
            opt(step.upper)
        ));
    }
    s
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    rows.iter()
        .map(|r| {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:>w$}"))
                .collect();
            format!("{}\n", line.join("  ").trim_end())
        })
        .collect()
}

pub fn forecast(a: ForecastArgs) -> Result<(), CliError> {
    if a.horizon == 0 {
        return Err(usage("--horizon must be at least 1"));
    }
    if !(a.confidence > 0.0 && a.confidence < 1.0) {
        return Err(usage("--confidence must lie strictly between 0 and 1"));
    }
    let bytes = read_input(&a.model, "model file")?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Failure("model file is not valid text".into()))?;
    let model = FittedModel::from_json(&text)
        .map_err(|e| CliError::Failure(format!("corrupt model file {}: {e}", a.model.display())))?;
    let f = model.forecast(a.horizon, a.confidence)?;
    let text = match a.format {
        Format::Csv => forecast_csv(&f),
        Format::Structured => pretty(&f),
        Format::Table => {
            let mut rows = vec![["timestamp", "point", "lower", "upper"]
                .map(String::from)
                .to_vec()];
            for s in &f.steps {
                let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
                rows.push(vec![
                    format_timestamp(s.timestamp),
                    format!("{:.4}", s.point),
                    opt(s.lower),
                    opt(s.upper),
                ]);
            }
            aligned(&rows)
        }
    };
    emit(&text)
}

fn load_specs(path: &Path, seed: Option<u64>) -> Result<Vec<ModelSpec>, CliError> {
    let bytes = read_input(path, "spec file")?;
    let text = String::from_utf8(bytes).map_err(|_| usage("spec file is not valid text"))?;
    let value: Value = if path.extension().is_some_and(|e| e == "toml") {
        let t: toml::Table = text
            .parse()
            .map_err(|e| usage(format!("invalid spec file: {e}")))?;
        serde_json::to_value(t).map_err(|e| usage(format!("invalid spec file: {e}")))?
    } else {
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid spec file: {e}")))?
    };
    let list = match value {
        Value::Array(items) => items,
        Value::Object(mut m) => match m.remove("specs") {
            Some(Value::Array(items)) => items,
            _ => return Err(usage("spec file needs a 'specs' array")),
        },
        _ => return Err(usage("spec file needs an array of specs")),
    };
    if list.is_empty() {
        return Err(usage("spec file lists no specs"));
    }
    list.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut spec: ModelSpec =
                serde_json::from_value(v).map_err(|e| usage(format!("spec {i}: {e}")))?;
            spec.validate()
                .map_err(|e| usage(format!("spec {i}: {e}")))?;
            if let Some(seed) = seed {
                match &mut spec.family {
                    ModelFamily::Arima(c) | ModelFamily::Sarima(c) => c.seed = seed,
                    ModelFamily::Lstm(c) => c.seed = seed,
                    ModelFamily::Ets { .. } => {}
                }
            }
            Ok(spec)
        })
        .collect()
}

fn leaderboard_csv(reports: &[EvaluationReport]) -> String {
    let mut s = String::from("rank,model,mae,mse,rmse,mape,error\n");
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, r) in reports.iter().enumerate() {
        let m = r.aggregate.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i + 1,
            csv_field(&r.model),
            num(m.map(|m| m.mae)),
            num(m.map(|m| m.mse)),
            num(m.map(|m| m.rmse)),
            num(m.and_then(|m| m.mape)),
            csv_field(r.error.as_deref().unwrap_or(""))
        ));
    }
    s
}

pub fn compare(a: CompareArgs) -> Result<(), CliError> {
    let specs = load_specs(&a.specs, a.seed)?;
    let series = load_series(&a.input)?;
    let reports: Vec<EvaluationReport> = compare_models(&series, &specs, a.folds, a.horizon)?
        .into_iter()
        .map(EvaluationReport::without_timing)
        .collect();
    let text = match a.format {
        Format::Table => format_leaderboard(&reports),
        Format::Csv => leaderboard_csv(&reports),
        Format::Structured => pretty(&json!({
            "folds": a.folds,
            "horizon": a.horizon,
            "reports": reports,
        })),
    };
    emit(&text)
}

pub fn serve_cmd(a: ServeArgs) -> Result<(), CliError> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let ip: IpAddr = a
        .host
        .parse()
        .map_err(|_| usage(format!("invalid --host {}", a.host)))?;
    let addr = SocketAddr::new(ip, a.port);
    let config = ServiceConfig {
        data_dir: PathBuf::from(&a.data_dir),
        max_upload_bytes: a.max_upload_bytes,
        workers: a.workers,
    };
    let rt = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Failure(format!("cannot start runtime: {e}")))?;
    rt.block_on(async move {
        let (tx, rx) = tokio::sync::oneshot::channel();
        let server = tokio::spawn(serve(config, addr, shutdown_signal(), Some(tx)));
        if let Ok(bound) = rx.await {
            let _ = emit(&format!("listening on http://{bound}\n"));
        }
        match server.await {
            Ok(Ok(())) => Ok(()),
            Ok(Err(e)) => Err(CliError::Failure(e.to_string())),
            Err(e) => Err(CliError::Failure(format!("server task failed: {e}"))),
        }
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        CliError::Failure(e.to_string())
    }
}
