use std::time::{Duration, Instant};

use hybridcast::synth::{generate, SynthConfig};
use hybridcast::TimeSeries;
use hybridcast_service::{start_in_background, RunningServer, ServiceConfig};
use reqwest::blocking::{multipart, Client};
use reqwest::StatusCode;
use serde_json::{json, Value};
use tempfile::TempDir;

struct Harness {
    server: RunningServer,
    client: Client,
    _dir: TempDir,
}

fn start_with(config: impl FnOnce(&mut ServiceConfig)) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ServiceConfig::new(dir.path());
    config(&mut cfg);
    let server = start_in_background(cfg, "127.0.0.1:0".parse().unwrap()).unwrap();
    Harness {
        server,
        client: Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .unwrap(),
        _dir: dir,
    }
}

fn start() -> Harness {
    start_with(|_| {})
}

impl Harness {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.server.url())
    }

    fn upload(&self, csv: &str) -> (StatusCode, Value) {
        let form = multipart::Form::new().part(
            "file",
            multipart::Part::bytes(csv.as_bytes().to_vec()).file_name("data.csv"),
        );
        let resp = self
            .client
            .post(self.url("/datasets"))
            .multipart(form)
            .send()
            .unwrap();
        (resp.status(), resp.json().unwrap())
    }

    fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let resp = self.client.post(self.url(path)).json(&body).send().unwrap();
        (resp.status(), resp.json().unwrap())
    }

    fn get(&self, path: &str) -> (StatusCode, Value) {
        let resp = self.client.get(self.url(path)).send().unwrap();
        (resp.status(), resp.json().unwrap())
    }

    fn fit(&self, dataset: &str, spec: Value) -> Value {
        let (status, job) = self.post("/models", json!({"dataset_id": dataset, "spec": spec}));
        assert_eq!(status, StatusCode::ACCEPTED, "{job}");
        self.wait(job["id"].as_str().unwrap())
    }

    fn wait(&self, job: &str) -> Value {
        let deadline = Instant::now() + Duration::from_secs(120);
        loop {
            let (status, body) = self.get(&format!("/models/{job}"));
            assert_eq!(status, StatusCode::OK);
            if matches!(body["status"].as_str(), Some("done" | "failed")) {
                return body;
            }
            assert!(Instant::now() < deadline, "job {job} did not finish");
            std::thread::sleep(Duration::from_millis(50));
        }
    }
}

fn csv_of(values: &[f64]) -> String {
    TimeSeries::from_values("v", 1_704_067_200, 86_400, values)
        .unwrap()
        .to_csv()
}

fn seasonal_csv(n: usize, seed: u64) -> String {
    generate(&SynthConfig::seasonal(n, 12, seed))
        .unwrap()
        .series
        .to_csv()
}

fn ets(trend: &str, seasonal: &str, period: Option<usize>) -> Value {
    let mut spec = json!({"trend": trend, "seasonal": seasonal});
    if let Some(m) = period {
        spec["period"] = json!(m);
    }
    json!({"family": "ets", "spec": spec})
}

/// Writes the whole request before reading, so an early rejection cannot race the upload.
fn raw_upload(h: &Harness, csv: &str) -> (u16, String) {
    use std::io::{Read, Write};
    let boundary = "XBOUNDARYX";
    let body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"big.csv\"\r\n\r\n{csv}\r\n--{boundary}--\r\n"
    );
    let head = format!(
        "POST /datasets HTTP/1.1\r\nHost: localhost\r\nContent-Type: multipart/form-data; boundary={boundary}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    let mut stream = std::net::TcpStream::connect(h.server.addr).unwrap();
    stream.write_all(head.as_bytes()).unwrap();
    let _ = stream.write_all(body.as_bytes());
    let mut out = String::new();
    let _ = stream.read_to_string(&mut out);
    let status = out.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, out)
}

#[test]
fn upload_is_content_addressed() {
    let h = start();
    let csv = seasonal_csv(100, 1);
    let (status, first) = h.upload(&csv);
    assert_eq!(status, StatusCode::CREATED, "{first}");
    assert_eq!(first["row_count"], 100);
    assert_eq!(first["api_version"], "1");
    let (status, second) = h.upload(&csv);
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first["id"], second["id"]);
    let (status, list) = h.get("/datasets");
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list["datasets"].as_array().unwrap().len(), 1);
    let (status, one) = h.get(&format!("/datasets/{}", first["id"].as_str().unwrap()));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(one["observations"].as_array().unwrap().len(), 100);
}

#[test]
fn upload_errors() {
    let h = start_with(|c| c.max_upload_bytes = 2048);
    let mut csv = String::from("timestamp,value\n");
    for i in 1..=10 {
        if i == 7 {
            csv.push_str("not-a-time,1\n");
        } else {
            csv.push_str(&format!("2024-01-{i:02},1\n"));
        }
    }
    let (status, body) = h.upload(&csv);
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "ingest_error");
    assert!(
        body["error"]["message"].as_str().unwrap().contains("row 7"),
        "{body}"
    );

    let (status, body) = raw_upload(&h, &seasonal_csv(400, 1));
    assert_eq!(status, 413, "{body}");
    assert!(body.contains("payload_too_large"), "{body}");

    let resp = h
        .client
        .post(h.url("/datasets"))
        .multipart(multipart::Form::new().text("other", "x"))
        .send()
        .unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[test]
fn preprocess_derives_new_datasets() {
    let h = start();
    let mut values: Vec<f64> = (0..40).map(|t| 10.0 + t as f64).collect();
    values[5] = f64::NAN;
    let csv = csv_of(&values).replace(",NaN", ",");
    let (_, parent) = h.upload(&csv);
    let id = parent["id"].as_str().unwrap();
    assert_eq!(parent["missing_count"], 1);

    let pipeline = json!({"pipeline": [
        {"op": "impute", "method": "forward_fill"},
        {"op": "normalize", "method": "minmax"}
    ]});
    let (status, derived) = h.post(&format!("/datasets/{id}/preprocess"), pipeline.clone());
    assert_eq!(status, StatusCode::CREATED, "{derived}");
    assert_eq!(derived["parent"], parent["id"]);
    assert_eq!(derived["pipeline"].as_array().unwrap().len(), 2);
    assert_eq!(derived["transforms"].as_array().unwrap().len(), 1);
    assert_eq!(derived["missing_count"], 0);
    let (status, again) = h.post(&format!("/datasets/{id}/preprocess"), pipeline);
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["id"], derived["id"]);

    let (_, source) = h.get(&format!("/datasets/{id}"));
    assert_eq!(source["missing_count"], 1);
    assert!(source.get("transforms").is_none());

    let (_, zeros) = h.upload(&csv_of(&[0.0, 1.0, 2.0, 3.0]));
    let zid = zeros["id"].as_str().unwrap();
    let (status, body) = h.post(
        &format!("/datasets/{zid}/preprocess"),
        json!([{"op": "log"}]),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["step"], 0);
    assert_eq!(body["error"]["code"], "domain_error");

    let (status, body) = h.post(
        &format!("/datasets/{zid}/preprocess"),
        json!({"pipeline": []}),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "empty_pipeline");

    let (status, body) = h.post(
        &format!("/datasets/{zid}/preprocess"),
        json!([{"op": "difference", "lag": 1}, {"op": "bogus"}]),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["step"], 1);

    let (status, _) = h.post("/datasets/0000/preprocess", json!([{"op": "log"}]));
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn fit_jobs_finish_with_diagnostics() {
    let h = start();
    let (_, ds) = h.upload(&seasonal_csv(100, 2));
    let id = ds["id"].as_str().unwrap();

    let done = h.fit(id, ets("additive", "additive", Some(12)));
    assert_eq!(done["status"], "done", "{done}");
    assert!(done["diagnostics"]["aic"].as_f64().unwrap().is_finite());
    assert!(done["started_at"].is_string() && done["finished_at"].is_string());

    let (_, short) = h.upload(&csv_of(
        &(0..30)
            .map(|t| (t as f64 * 0.7).sin() + 5.0)
            .collect::<Vec<_>>(),
    ));
    let lstm = h.fit(
        short["id"].as_str().unwrap(),
        json!({"family": "lstm", "epochs": 10, "window": 5, "hidden_units": 4}),
    );
    assert_eq!(lstm["status"], "done", "{lstm}");
    assert_eq!(
        lstm["diagnostics"]["training_report"]["train_loss"]
            .as_array()
            .unwrap()
            .len(),
        10
    );

    let (_, tiny) = h.upload(&csv_of(&[1.0, 2.0, 3.0, 4.0, 5.0]));
    let arima = h.fit(
        tiny["id"].as_str().unwrap(),
        json!({"family": "arima", "order": {"p": 2, "d": 1, "q": 1}}),
    );
    assert_eq!(arima["status"], "failed", "{arima}");
    assert!(arima["error"]["code"].is_string());
    assert!(!arima["error"]["message"].as_str().unwrap().is_empty());
    assert!(arima.get("model_id").is_none());

    let (status, _) = h.post(
        "/models",
        json!({"dataset_id": "nope", "spec": ets("none", "none", None)}),
    );
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body) = h.post(
        "/models",
        json!({"dataset_id": id, "spec": {"family": "prophet"}}),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_spec");
    let (status, _) = h.post(
        "/models",
        json!({"dataset_id": id, "spec": ets("none", "additive", None)}),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = h.get("/models/unknown");
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn forecasts_continue_the_grid() {
    let h = start();
    let (_, ds) = h.upload(&seasonal_csv(120, 3));
    let id = ds["id"].as_str().unwrap();
    let last = ds["last_timestamp"].as_i64().unwrap();
    let freq = ds["frequency"].as_i64().unwrap();

    let job = h.fit(id, ets("additive", "additive", Some(12)));
    let jid = job["id"].as_str().unwrap();
    let (status, f) = h.post(&format!("/models/{jid}/forecast"), json!({"horizon": 12}));
    assert_eq!(status, StatusCode::OK, "{f}");
    let steps = f["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 12);
    for (i, s) in steps.iter().enumerate() {
        assert_eq!(
            s["timestamp"].as_i64().unwrap(),
            last + (i as i64 + 1) * freq
        );
        assert!(s["lower"].as_f64().unwrap() <= s["point"].as_f64().unwrap());
    }
    assert_eq!(f["confidence"], 0.95);

    let arima = h.fit(
        id,
        json!({"family": "arima", "order": {"p": 1, "d": 1, "q": 1}}),
    );
    let aid = arima["id"].as_str().unwrap();
    let (_, f) = h.post(
        &format!("/models/{aid}/forecast"),
        json!({"horizon": 24, "confidence": 0.95}),
    );
    let widths: Vec<f64> = f["steps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["upper"].as_f64().unwrap() - s["lower"].as_f64().unwrap())
        .collect();
    assert!(widths.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{widths:?}");

    let (status, body) = h.post(&format!("/models/{aid}/forecast"), json!({"horizon": 0}));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_horizon");
    let (status, _) = h.post(
        &format!("/models/{aid}/forecast"),
        json!({"horizon": 3, "confidence": 1.5}),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, tiny) = h.upload(&csv_of(&[1.0, 2.0, 3.0]));
    let failed = h.fit(tiny["id"].as_str().unwrap(), ets("additive", "none", None));
    assert_eq!(failed["status"], "failed");
    let (status, body) = h.post(
        &format!("/models/{}/forecast", failed["id"].as_str().unwrap()),
        json!({"horizon": 3}),
    );
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "job_not_done");

    let lstm = h.fit(
        id,
        json!({"family": "lstm", "epochs": 5, "window": 12, "hidden_units": 4}),
    );
    let (_, f) = h.post(
        &format!("/models/{}/forecast", lstm["id"].as_str().unwrap()),
        json!({"horizon": 6}),
    );
    assert_eq!(f["intervals_available"], false);
    assert!(f["steps"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s.get("lower").is_none()));
}

#[test]
fn forecast_inverts_dataset_pipeline() {
    let h = start();
    let mut values: Vec<f64> = (1..=6).map(|t| 40.0 * t as f64).collect();
    values.extend(std::iter::repeat_n(250.0, 54));
    let (_, ds) = h.upload(&csv_of(&values));
    let (status, derived) = h.post(
        &format!("/datasets/{}/preprocess", ds["id"].as_str().unwrap()),
        json!([{"op": "log"}, {"op": "normalize", "method": "minmax"}]),
    );
    assert_eq!(status, StatusCode::CREATED, "{derived}");
    assert_eq!(derived["transforms"].as_array().unwrap().len(), 2);
    let spec = json!({"family": "ets", "spec": {"trend": "none", "seasonal": "none"}, "fixed": {"alpha": 1.0}});
    let job = h.fit(derived["id"].as_str().unwrap(), spec);
    assert_eq!(job["status"], "done", "{job}");
    let (_, f) = h.post(
        &format!("/models/{}/forecast", job["id"].as_str().unwrap()),
        json!({"horizon": 5}),
    );
    for s in f["steps"].as_array().unwrap() {
        assert!((s["point"].as_f64().unwrap() - 250.0).abs() < 1e-9, "{s}");
        assert!(s["lower"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn compare_ranks_and_reports_failures() {
    let h = start();
    let (_, ds) = h.upload(&seasonal_csv(240, 42));
    let id = ds["id"].as_str().unwrap();
    let specs = json!([
        {"family": "arima", "order": {"p": 1, "d": 1, "q": 1}},
        {"family": "sarima", "order": {"p": 1, "d": 1, "q": 1}, "seasonal": {"P": 1, "D": 1, "Q": 1, "s": 12}},
        ets("additive", "additive", Some(12)),
        {"family": "lstm", "epochs": 20, "window": 12, "hidden_units": 8}
    ]);
    let (status, body) = h.post(
        "/compare",
        json!({"dataset_id": id, "specs": specs, "folds": 5, "horizon": 12}),
    );
    assert_eq!(status, StatusCode::OK, "{body}");
    let rows = body["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        for key in ["mae", "mse", "rmse", "mape"] {
            assert!(r[key].as_f64().unwrap().is_finite(), "{r}");
        }
    }
    let pos = |label: &str| rows.iter().position(|r| r["model"] == label).unwrap();
    assert!(pos("SARIMA(1,1,1)(1,1,1)[12]") < pos("ARIMA(1,1,1)"));
    assert_eq!(body["reports"][0]["folds"].as_array().unwrap().len(), 5);
    assert!(body["table"].as_str().unwrap().starts_with("Model"));

    let (status, body) = h.post("/compare", json!({"dataset_id": id, "specs": []}));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "empty_specs");

    let (_, tiny) = h.upload(&csv_of(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]));
    let (status, body) = h.post(
        "/compare",
        json!({"dataset_id": tiny["id"], "specs": [ets("additive", "additive", Some(12))], "folds": 2, "horizon": 2}),
    );
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR, "{body}");
    assert_eq!(body["error"]["code"], "comparison_error");
    assert_eq!(body["error"]["causes"].as_array().unwrap().len(), 1);

    let (status, _) = h.post("/compare", json!({"dataset_id": "missing", "specs": specs}));
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn anomalies_on_spike_fixture() {
    let h = start();
    let out = generate(&SynthConfig::traffic(200, 3)).unwrap();
    let (_, ds) = h.upload(&out.series.to_csv());
    let id = ds["id"].as_str().unwrap();
    let job = h.fit(id, ets("additive", "additive", Some(7)));
    let jid = job["id"].as_str().unwrap();

    let (status, body) = h.get(&format!("/datasets/{id}/anomalies?model={jid}&threshold=4"));
    assert_eq!(status, StatusCode::OK, "{body}");
    let events = body["events"].as_array().unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0]["index"].as_u64().unwrap() as usize, out.spikes[0]);
    assert_eq!(events[0]["direction"], "spike");

    let (_, body) = h.get(&format!(
        "/datasets/{id}/anomalies?model={jid}&threshold=1e9"
    ));
    assert!(body["events"].as_array().unwrap().is_empty());
    let (status, _) = h.get(&format!("/datasets/{id}/anomalies?model={jid}&threshold=0"));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, other) = h.upload(&seasonal_csv(60, 9));
    let (status, body) = h.get(&format!(
        "/datasets/{}/anomalies?model={jid}",
        other["id"].as_str().unwrap()
    ));
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "dataset_mismatch");
    let (status, _) = h.get(&format!("/datasets/{id}/anomalies?model=nope"));
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn restart_requeues_unfinished_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new();
    let addr = "127.0.0.1:0".parse().unwrap();

    let mut idle = ServiceConfig::new(dir.path());
    idle.workers = 0;
    let server = start_in_background(idle, addr).unwrap();
    let csv = seasonal_csv(60, 4);
    let form = multipart::Form::new().part(
        "file",
        multipart::Part::bytes(csv.into_bytes()).file_name("a.csv"),
    );
    let ds: Value = client
        .post(format!("{}/datasets", server.url()))
        .multipart(form)
        .send()
        .unwrap()
        .json()
        .unwrap();
    let job: Value = client
        .post(format!("{}/models", server.url()))
        .json(&json!({"dataset_id": ds["id"], "spec": ets("none", "none", None)}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(job["status"], "queued");
    server.stop().unwrap();

    let h = Harness {
        server: start_in_background(ServiceConfig::new(dir.path()), addr).unwrap(),
        client,
        _dir: dir,
    };
    let done = h.wait(job["id"].as_str().unwrap());
    assert_eq!(done["status"], "done");
    let (_, list) = h.get("/models");
    assert_eq!(list["models"].as_array().unwrap().len(), 1);
}

#[test]
fn second_bind_on_same_port_fails() {
    let h = start();
    let dir = tempfile::tempdir().unwrap();
    let err = start_in_background(ServiceConfig::new(dir.path()), h.server.addr);
    assert!(err.is_err());
}
