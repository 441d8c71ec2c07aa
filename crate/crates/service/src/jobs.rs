//! Asynchronous fit jobs: a FIFO queue drained by a fixed pool of worker threads.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use crossbeam::channel::{Receiver, Sender};
use hybridcast::model::fit_model;
use hybridcast::{ForecastError, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::store::{digest, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_finished(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobError {
    pub code: String,
    pub message: String,
}

impl From<&ForecastError> for JobError {
    fn from(e: &ForecastError) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJob {
    pub id: String,
    pub dataset_id: String,
    pub spec: ModelSpec,
    pub spec_digest: String,
    pub status: JobStatus,
    pub submitted_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
    /// Id of the stored fitted model; equals the job id once done.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<JobError>,
    /// Fit diagnostics once done.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

impl FitJob {
    pub fn new(dataset_id: &str, spec: ModelSpec) -> Self {
        let submitted_at = now();
        let n = COUNTER.fetch_add(1, Ordering::Relaxed);
        let spec_digest = spec.digest();
        let id = digest(&[
            dataset_id.as_bytes(),
            spec_digest.as_bytes(),
            submitted_at.as_bytes(),
            &n.to_le_bytes(),
            &std::process::id().to_le_bytes(),
        ])[..32]
            .to_string();
        Self {
            id,
            dataset_id: dataset_id.to_string(),
            spec,
            spec_digest,
            status: JobStatus::Queued,
            submitted_at,
            started_at: None,
            finished_at: None,
            model_id: None,
            error: None,
            diagnostics: None,
        }
    }
}

/// Handle to the queue. Dropping every clone lets the workers exit.
#[derive(Clone)]
pub struct JobQueue {
    tx: Sender<String>,
}

impl JobQueue {
    /// Starts `workers` threads. With zero workers jobs are accepted and left queued.
    pub fn start(store: Arc<Store>, workers: usize) -> (Self, Vec<JoinHandle<()>>) {
        let (tx, rx) = crossbeam::channel::unbounded::<String>();
        let handles = (0..workers)
            .map(|i| {
                let rx = rx.clone();
                let store = store.clone();
                std::thread::Builder::new()
                    .name(format!("fit-worker-{i}"))
                    .spawn(move || worker(&store, &rx))
                    .expect("spawn worker thread")
            })
            .collect();
        (Self { tx }, handles)
    }

    pub fn submit(&self, job_id: &str) {
        // Send only fails once all workers are gone, which leaves the job queued on disk.
        let _ = self.tx.send(job_id.to_string());
    }

    /// Re-queues jobs that never finished, oldest first.
    pub fn recover(&self, store: &Store) -> std::io::Result<usize> {
        let mut pending: Vec<FitJob> = store
            .jobs()?
            .into_iter()
            .filter(|j| !j.status.is_finished())
            .collect();
        pending.sort_by(|a, b| {
            a.submitted_at
                .cmp(&b.submitted_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        for job in &mut pending {
            if job.status == JobStatus::Running {
                job.status = JobStatus::Queued;
                job.started_at = None;
                store.put_job(job)?;
            }
            self.submit(&job.id);
        }
        Ok(pending.len())
    }
}

fn worker(store: &Store, rx: &Receiver<String>) {
    while let Ok(id) = rx.recv() {
        if let Err(e) = run_job(store, &id) {
            tracing::error!(job = %id, error = %e, "job bookkeeping failed");
        }
    }
}

fn run_job(store: &Store, id: &str) -> std::io::Result<()> {
    let lock = store.lock(id);
    let Some(mut job) = ({
        let _guard = lock.lock().expect("job lock poisoned");
        let job = store.job(id)?;
        match job {
            Some(mut j) if j.status == JobStatus::Queued => {
                j.status = JobStatus::Running;
                j.started_at = Some(now());
                store.put_job(&j)?;
                Some(j)
            }
            _ => None,
        }
    }) else {
        return Ok(());
    };
    tracing::info!(job = %id, model = %job.spec.label(), "fitting");

    let outcome = match store.dataset_series(&job.dataset_id)? {
        Some(series) => fit_model(&series, &job.spec),
        None => Err(ForecastError::Data(format!(
            "dataset {} is missing",
            job.dataset_id
        ))),
    };
    match outcome {
        Ok(model) => {
            store.put_model(id, &model)?;
            job.status = JobStatus::Done;
            job.model_id = Some(id.to_string());
            job.diagnostics = Some(model.summary());
        }
        Err(e) => {
            tracing::warn!(job = %id, error = %e, "fit failed");
            job.status = JobStatus::Failed;
            job.error = Some(JobError::from(&e));
        }
    }
    job.finished_at = Some(now());
    let _guard = lock.lock().expect("job lock poisoned");
    store.put_job(&job)
}
