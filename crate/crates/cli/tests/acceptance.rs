#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one check per criterion, each printed as PASS or FAIL.
//!
//! Run with `cargo test -p hybridcast-cli --test acceptance -- --nocapture`
//! to see the report.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hybridcast::arima::{fit_arima, ArimaConfig, ArimaOrder, SeasonalOrder};
use hybridcast::ets::{
    fit_ets, fit_ets_with, EtsFixed, EtsParams, EtsSpec, FittedEts, SeasonalKind,
};
use hybridcast::evaluate::{compare_models, detect_anomalies, metrics, rolling_origin_cv};
use hybridcast::lstm::{fit_lstm, gradient_check, LstmConfig, LstmWeights, WindowPair};
use hybridcast::model::{fit_model, ModelFamily, ModelSpec};
use hybridcast::preprocess::{
    denormalize, difference, exp_inverse, log_transform, normalize, undifference, NormalizeMethod,
};
use hybridcast::synth::{generate, SynthConfig};
use hybridcast::TimeSeries;
use hybridcast_service::{start_in_background, ServiceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use reqwest::blocking::{multipart, Client};
use serde_json::{json, Value};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Check {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn series(v: &[f64]) -> TimeSeries {
    TimeSeries::from_values("y", 0, 3600, v).unwrap()
}

fn ar_process(phi: &[f64], c: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 200;
    let mut y = vec![0.0; n + burn];
    for t in 0..y.len() {
        let mut v = c + Distribution::<f64>::sample(&StandardNormal, &mut rng);
        for (k, p) in phi.iter().enumerate() {
            if t > k {
                v += p * y[t - k - 1];
            }
        }
        y[t] = v;
    }
    y.split_off(burn)
}

fn metric_oracle() -> Check {
    let m = metrics(&[100.0, 200.0], &[110.0, 180.0]).map_err(|e| e.to_string())?;
    ensure((m.mae - 15.0).abs() < 1e-9, || format!("mae {}", m.mae))?;
    ensure((m.mse - 250.0).abs() < 1e-9, || format!("mse {}", m.mse))?;
    ensure((m.rmse - 15.8113883).abs() < 1e-7, || {
        format!("rmse {}", m.rmse)
    })?;
    // Mean of |a - p| / |a| over the points, in percent.
    let mape = 100.0 * ((100.0f64 - 110.0).abs() / 100.0 + (200.0f64 - 180.0).abs() / 200.0) / 2.0;
    let got = m.mape.ok_or("mape missing")?;
    ensure((got - mape).abs() < 1e-9, || {
        format!("mape {got} vs {mape}")
    })
}

fn ar1_recovery() -> Check {
    let start = Instant::now();
    let y = ar_process(&[0.7], 0.0, 500, 2024);
    let fit = fit_arima(
        &series(&y),
        &ArimaConfig::new(ArimaOrder::new(1, 0, 0), None),
    )
    .map_err(|e| e.to_string())?;
    let phi = fit.params.phi[0];
    ensure((phi - 0.7).abs() <= 0.1, || format!("phi {phi}"))?;
    within(start, Duration::from_secs(5))
}

fn ar1_forecast() -> Check {
    let y = ar_process(&[0.7], 0.0, 500, 2024);
    let config = ArimaConfig::new(ArimaOrder::new(1, 0, 0), None).with_intercept(false);
    let fit = fit_arima(&series(&y), &config).map_err(|e| e.to_string())?;
    let phi = fit.params.phi[0];
    let last = *y.last().unwrap();
    let f = fit.forecast(20, 0.95).map_err(|e| e.to_string())?;
    for (h, p) in f.points.iter().enumerate() {
        let expected = phi.powi(h as i32 + 1) * last;
        ensure((p - expected).abs() < 1e-6, || {
            format!("h={}: {p} vs {expected}", h + 1)
        })?;
    }
    Ok(())
}

/// Normal equations solved by Gaussian elimination with partial pivoting.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = rows[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &yv) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += r[i] * r[j];
            }
            a[i][k] += r[i] * yv;
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                for j in col..=k {
                    a[row][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

fn css_vs_ols() -> Check {
    let y = ar_process(&[0.5, -0.3], 2.0, 400, 99);
    let fit = fit_arima(
        &series(&y),
        &ArimaConfig::new(ArimaOrder::new(2, 0, 0), None),
    )
    .map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = (2..y.len())
        .map(|t| vec![1.0, y[t - 1], y[t - 2]])
        .collect();
    let beta = least_squares(&rows, &y[2..]);
    let got = [fit.params.intercept, fit.params.phi[0], fit.params.phi[1]];
    for (g, b) in got.iter().zip(&beta) {
        ensure((g - b).abs() < 1e-3, || format!("{got:?} vs {beta:?}"))?;
    }
    Ok(())
}

fn seasonality_claim() -> Check {
    let start = Instant::now();
    let s = generate(&SynthConfig::seasonal(240, 12, 42))
        .map_err(|e| e.to_string())?
        .series;
    let specs = vec![
        ModelSpec::new(ModelFamily::Arima(ArimaConfig::new(
            ArimaOrder::new(1, 1, 1),
            None,
        ))),
        ModelSpec::new(ModelFamily::Sarima(ArimaConfig::new(
            ArimaOrder::new(1, 1, 1),
            Some(SeasonalOrder::new(1, 1, 1, 12)),
        ))),
    ];
    let ranked = compare_models(&s, &specs, 5, 12).map_err(|e| e.to_string())?;
    ensure(ranked.iter().all(|r| r.error.is_none()), || {
        format!("{ranked:?}")
    })?;
    ensure(ranked[0].model == "SARIMA(1,1,1)(1,1,1)[12]", || {
        format!("first is {}", ranked[0].model)
    })?;
    let mape = |i: usize| {
        ranked[i]
            .aggregate
            .and_then(|m| m.mape)
            .unwrap_or(f64::INFINITY)
    };
    ensure(mape(0) < mape(1), || {
        format!("mape {} vs {}", mape(0), mape(1))
    })?;
    within(start, Duration::from_secs(60))
}

fn ets_naive_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..100.0)).collect();
    let fixed = EtsFixed {
        alpha: Some(1.0),
        ..Default::default()
    };
    let fit = fit_ets_with(&y, EtsSpec::simple(), &fixed).map_err(|e| e.to_string())?;
    for t in 1..y.len() {
        ensure(fit.fitted_values[t] == y[t - 1], || format!("t={t}"))?;
    }
    let ramp: Vec<f64> = (0..40).map(|t| 7.0 + 0.25 * t as f64).collect();
    let holt = fit_ets(&ramp, EtsSpec::holt())
        .and_then(|f| f.forecast(12, 0.95))
        .map_err(|e| e.to_string())?;
    for (h, p) in holt.points.iter().enumerate() {
        let expected = 7.0 + 0.25 * (40 + h) as f64;
        ensure((p - expected).abs() < 1e-6, || {
            format!("ramp h={}: {p} vs {expected}", h + 1)
        })?;
    }
    let params = EtsParams {
        alpha: 0.5,
        beta: None,
        gamma: None,
        initial_level: 10.0,
        initial_trend: None,
        initial_seasonals: Vec::new(),
    };
    let hand = FittedEts::from_params(&[12.0, 8.0], EtsSpec::simple(), params)
        .map_err(|e| e.to_string())?;
    // Errors 12 - 10 = 2 and 8 - 11 = -3.
    let sse = 2.0f64.powi(2) + 3.0f64.powi(2);
    ensure((hand.sse - sse).abs() < 1e-12, || {
        format!("sse {}", hand.sse)
    })
}

fn ets_shift_equivariance() -> Check {
    let y = generate(&SynthConfig::seasonal(96, 12, 5))
        .map_err(|e| e.to_string())?
        .series
        .complete_values()
        .unwrap();
    let spec = EtsSpec::holt_winters(SeasonalKind::Additive, 12);
    let k = 1000.0;
    let shifted: Vec<f64> = y.iter().map(|v| v + k).collect();
    let a = fit_ets(&y, spec)
        .and_then(|f| f.forecast(24, 0.95))
        .map_err(|e| e.to_string())?;
    let b = fit_ets(&shifted, spec)
        .and_then(|f| f.forecast(24, 0.95))
        .map_err(|e| e.to_string())?;
    for (p, q) in a.points.iter().zip(&b.points) {
        ensure((q - p - k).abs() < 1e-6, || format!("{p} + {k} vs {q}"))?;
    }
    Ok(())
}

fn lstm_gradient_check() -> Check {
    let start = Instant::now();
    for (seed, layers, hidden, window) in
        [(11, 1, 1, 3), (12, 1, 4, 5), (13, 2, 3, 4), (14, 2, 2, 6)]
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = LstmWeights::init(layers, hidden, &mut rng);
        let pair = WindowPair {
            inputs: (0..window).map(|_| rng.random_range(0.0..1.0)).collect(),
            target: rng.random_range(0.0..1.0),
        };
        let err = gradient_check(&w, &pair, 1e-5).map_err(|e| e.to_string())?;
        ensure(err <= 1e-4, || {
            format!("layers={layers} hidden={hidden}: {err}")
        })?;
    }
    within(start, Duration::from_secs(10))
}

fn lstm_overfit() -> Check {
    let start = Instant::now();
    let y: Vec<f64> = (0..50)
        .map(|t| (std::f64::consts::TAU * t as f64 / 12.0).sin())
        .collect();
    let config = LstmConfig {
        layers: 1,
        hidden_units: 16,
        window: 8,
        epochs: 500,
        learning_rate: 0.01,
        batch_size: 8,
        seed: 7,
        ..Default::default()
    };
    let fit = fit_lstm(&y, &config).map_err(|e| e.to_string())?;
    let last = *fit.report.train_loss.last().ok_or("no losses")?;
    ensure(fit.report.train_loss.len() <= 500, || {
        "too many epochs".into()
    })?;
    ensure(last < 1e-3, || format!("final training MSE {last}"))?;
    within(start, Duration::from_secs(60))
}

fn transform_round_trips() -> Check {
    let close = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * y.abs().max(1.0))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for case in 0..100 {
        let n = rng.random_range(3..200);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1e4)).collect();
        let s = series(&v);
        let lag = rng.random_range(1..3);
        let (d, rec) = difference(&s, lag).map_err(|e| e.to_string())?;
        let back = undifference(&d, &rec)
            .and_then(|b| b.complete_values())
            .map_err(|e| e.to_string())?;
        ensure(close(&back, &v), || format!("difference case {case}"))?;
        let (l, _) = log_transform(&s).map_err(|e| e.to_string())?;
        let back = exp_inverse(&l)
            .and_then(|b| b.complete_values())
            .map_err(|e| e.to_string())?;
        ensure(close(&back, &v), || format!("log case {case}"))?;
        for method in [NormalizeMethod::Minmax, NormalizeMethod::Zscore] {
            let (z, rec) = normalize(&s, method).map_err(|e| e.to_string())?;
            let back = denormalize(&z, &rec)
                .and_then(|b| b.complete_values())
                .map_err(|e| e.to_string())?;
            ensure(close(&back, &v), || format!("{method:?} case {case}"))?;
        }
    }
    Ok(())
}

fn cv_leakage_guard() -> Check {
    let s = generate(&SynthConfig::seasonal(120, 12, 1))
        .map_err(|e| e.to_string())?
        .series;
    let spec = ModelSpec::new(ModelFamily::Ets {
        spec: EtsSpec::holt(),
        fixed: EtsFixed::default(),
    });
    let report = rolling_origin_cv(&s, &spec, 5, 6).map_err(|e| e.to_string())?;
    ensure(report.folds.len() == 5, || {
        format!("{} folds", report.folds.len())
    })?;
    for f in &report.folds {
        let train = &s.timestamps()[..f.fold.train_len];
        let test = &s.timestamps()[f.fold.test_range()];
        ensure(train.iter().max() < test.iter().min(), || {
            format!("fold {} leaks", f.fold.index)
        })?;
    }
    Ok(())
}

fn anomaly_fixture() -> Check {
    let out = generate(&SynthConfig::traffic(200, 3)).map_err(|e| e.to_string())?;
    let spec = ModelSpec::new(ModelFamily::Ets {
        spec: EtsSpec::holt_winters(SeasonalKind::Additive, 7),
        fixed: EtsFixed::default(),
    });
    let model = fit_model(&out.series, &spec).map_err(|e| e.to_string())?;
    let flagged: Vec<usize> = model
        .anomalies(&out.series, 4.0)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|e| e.index)
        .collect();
    ensure(flagged == out.spikes, || {
        format!("flagged {flagged:?}, injected {:?}", out.spikes)
    })?;
    let values = out.series.complete_values().unwrap();
    let expected = model
        .in_sample_predictions(&out.series)
        .map_err(|e| e.to_string())?;
    let mut last = usize::MAX;
    for th in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 1e9] {
        let n = detect_anomalies(out.series.timestamps(), &values, &expected, th)
            .map_err(|e| e.to_string())?
            .len();
        ensure(n <= last, || format!("count rose to {n} at threshold {th}"))?;
        last = n;
    }
    Ok(())
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hybridcast"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

const FAMILY_SPECS: &str = r#"[
  {"family": "arima", "order": {"p": 1, "d": 1, "q": 1}},
  {"family": "sarima", "order": {"p": 1, "d": 1, "q": 1}, "seasonal": {"P": 1, "D": 1, "Q": 1, "s": 12}},
  {"family": "ets", "spec": {"trend": "additive", "seasonal": "additive", "period": 12}},
  {"family": "lstm", "window": 24, "hidden_units": 8, "epochs": 30}
]"#;

fn cli_pipeline(dir: &Path, seed: &str) -> Result<Vec<Vec<u8>>, String> {
    std::fs::write(dir.join("specs.json"), FAMILY_SPECS).map_err(|e| e.to_string())?;
    let mut outputs = vec![run_cli(
        dir,
        &[
            "synth", "--kind", "seasonal", "--n", "240", "--period", "12", "--seed", seed, "--out",
            "data.csv",
        ],
    )?];
    outputs.push(std::fs::read(dir.join("data.csv")).map_err(|e| e.to_string())?);
    let fits: [&[&str]; 4] = [
        &["--family", "arima"],
        &["--family", "sarima", "--period", "12"],
        &[
            "--family",
            "ets",
            "--trend",
            "additive",
            "--seasonal",
            "additive",
            "--period",
            "12",
        ],
        &[
            "--family",
            "lstm",
            "--window",
            "24",
            "--hidden-units",
            "8",
            "--epochs",
            "30",
        ],
    ];
    for (i, flags) in fits.iter().enumerate() {
        let model = format!("m{i}.model");
        let mut args = vec![
            "fit",
            "--in",
            "data.csv",
            "--out",
            &model,
            "--format",
            "structured",
            "--seed",
            seed,
        ];
        args.extend_from_slice(flags);
        outputs.push(run_cli(dir, &args)?);
        outputs.push(std::fs::read(dir.join(&model)).map_err(|e| e.to_string())?);
    }
    outputs.push(run_cli(
        dir,
        &[
            "compare",
            "--in",
            "data.csv",
            "--specs",
            "specs.json",
            "--seed",
            seed,
            "--format",
            "structured",
        ],
    )?);
    Ok(outputs)
}

fn cli_determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = cli_pipeline(a.path(), "7")?;
    let second = cli_pipeline(b.path(), "7")?;
    ensure(first.len() == second.len(), || {
        "output count differs".into()
    })?;
    for (i, (x, y)) in first.iter().zip(&second).enumerate() {
        ensure(x == y, || format!("output {i} differs between runs"))?;
    }
    let compare: Value =
        serde_json::from_slice(first.last().unwrap()).map_err(|e| e.to_string())?;
    let reports = compare["reports"].as_array().ok_or("no reports")?;
    ensure(reports.len() == 4, || format!("{} reports", reports.len()))?;
    ensure(reports.iter().all(|r| r["error"].is_null()), || {
        format!("{compare}")
    })
}

fn service_contract() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let server = start_in_background(
        ServiceConfig::new(dir.path()),
        "127.0.0.1:0".parse().unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let client = Client::builder()
        .timeout(Duration::from_secs(60))
        .build()
        .map_err(|e| e.to_string())?;
    let url = |p: &str| format!("{}{p}", server.url());
    let call = |req: reqwest::blocking::RequestBuilder| -> Result<(u16, Value), String> {
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        Ok((status, resp.json().map_err(|e| e.to_string())?))
    };
    let expect = |what: &str, got: u16, want: u16, body: &Value| {
        ensure(got == want, || {
            format!("{what}: status {got}, expected {want}: {body}")
        })
    };

    let out = generate(&SynthConfig::traffic(200, 3)).map_err(|e| e.to_string())?;
    let csv = out.series.to_csv();
    let upload = || {
        let part = multipart::Part::bytes(csv.clone().into_bytes()).file_name("traffic.csv");
        client
            .post(url("/datasets"))
            .multipart(multipart::Form::new().part("file", part))
    };
    let (s, first) = call(upload())?;
    expect("upload", s, 201, &first)?;
    let (s, again) = call(upload())?;
    expect("duplicate upload", s, 200, &again)?;
    ensure(first["id"] == again["id"], || {
        "duplicate upload changed the id".into()
    })?;
    let id = first["id"].as_str().ok_or("no id")?.to_string();

    let (s, derived) = call(
        client
            .post(url(&format!("/datasets/{id}/preprocess")))
            .json(&json!({"pipeline": [{"op": "log"}, {"op": "normalize", "method": "minmax"}]})),
    )?;
    expect("preprocess", s, 201, &derived)?;
    let derived_id = derived["id"].as_str().ok_or("no derived id")?.to_string();

    let wait = |job: &str| -> Result<Value, String> {
        let deadline = Instant::now() + Duration::from_secs(60);
        loop {
            let (s, body) = call(client.get(url(&format!("/models/{job}"))))?;
            expect("job status", s, 200, &body)?;
            if matches!(body["status"].as_str(), Some("done" | "failed")) {
                return Ok(body);
            }
            ensure(Instant::now() < deadline, || format!("job {job} timed out"))?;
            std::thread::sleep(Duration::from_millis(50));
        }
    };
    let submit = |dataset: &str, spec: Value| -> Result<Value, String> {
        let (s, job) = call(
            client
                .post(url("/models"))
                .json(&json!({"dataset_id": dataset, "spec": spec})),
        )?;
        expect("fit", s, 202, &job)?;
        let done = wait(job["id"].as_str().ok_or("no job id")?)?;
        ensure(done["status"] == "done", || format!("job failed: {done}"))?;
        Ok(done)
    };

    let hw = json!({"family": "ets", "spec": {"trend": "additive", "seasonal": "additive", "period": 7}});
    let job = submit(&derived_id, hw.clone())?;
    let (s, f) = call(
        client
            .post(url(&format!(
                "/models/{}/forecast",
                job["id"].as_str().unwrap()
            )))
            .json(&json!({"horizon": 14})),
    )?;
    expect("forecast", s, 200, &f)?;
    let points: Vec<f64> = f["steps"]
        .as_array()
        .ok_or("no steps")?
        .iter()
        .filter_map(|s| s["point"].as_f64())
        .collect();
    ensure(points.len() == 14, || format!("{} steps", points.len()))?;
    let values = out.series.complete_values().unwrap();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ensure(
        points.iter().all(|p| *p > 0.5 * lo && *p < 1.5 * hi),
        || format!("not on the original scale: {points:?}"),
    )?;

    let raw_job = submit(&id, hw)?;
    let jid = raw_job["id"].as_str().unwrap();
    let (s, direct) = call(
        client
            .post(url(&format!("/models/{jid}/forecast")))
            .json(&json!({"horizon": 14})),
    )?;
    expect("forecast on raw dataset", s, 200, &direct)?;
    let (s, anomalies) = call(client.get(url(&format!(
        "/datasets/{id}/anomalies?model={jid}&threshold=4"
    ))))?;
    expect("anomalies", s, 200, &anomalies)?;
    let flagged: Vec<u64> = anomalies["events"]
        .as_array()
        .ok_or("no events")?
        .iter()
        .filter_map(|e| e["index"].as_u64())
        .collect();
    ensure(
        flagged.len() == 1 && flagged[0] as usize == out.spikes[0],
        || format!("flagged {flagged:?}"),
    )?;
    server.stop().map_err(|e| e.to_string())
}

type Criterion = (&'static str, fn() -> Check);

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("metric oracle", metric_oracle),
        ("AR(1) recovery", ar1_recovery),
        ("AR(1) forecast closed form", ar1_forecast),
        ("pure-AR CSS vs OLS", css_vs_ols),
        ("seasonality claim", seasonality_claim),
        ("ETS naive equivalence", ets_naive_equivalence),
        ("ETS shift equivariance", ets_shift_equivariance),
        ("LSTM gradient check", lstm_gradient_check),
        ("LSTM overfit", lstm_overfit),
        ("transform round trips", transform_round_trips),
        ("CV leakage guard", cv_leakage_guard),
        ("anomaly fixture", anomaly_fixture),
        ("CLI determinism", cli_determinism),
        ("service contract", service_contract),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(()) => println!("PASS {name} ({:.2}s)", start.elapsed().as_secs_f64()),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
