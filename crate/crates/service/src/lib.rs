//! HTTP service over the forecasting engine: content-addressed dataset
//! uploads, derived preprocessing datasets, asynchronous fit jobs,
//! forecasts, model comparison and anomaly detection.
//!
//! There is no authentication; run it behind a reverse proxy that owns
//! access control.

pub mod error;
pub mod handlers;
pub mod jobs;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

pub use error::ApiError;
pub use jobs::{FitJob, JobQueue, JobStatus};
pub use store::{DatasetRecord, Store};

/// Value of the top-level `api_version` field in every response body.
pub const API_VERSION: &str = "1";

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 8 * 1024 * 1024;
pub const DEFAULT_WORKERS: usize = 2;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },

    #[error("storage error: {0}")]
    Storage(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub max_upload_bytes: usize,
    /// Fit worker threads; zero accepts jobs but never runs them.
    pub workers: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            workers: DEFAULT_WORKERS,
        }
    }
}

pub struct AppState {
    pub store: Arc<Store>,
    pub queue: JobQueue,
}

/// Opens the store, starts the workers and re-queues unfinished jobs.
pub fn build(config: &ServiceConfig) -> Result<(Router, Vec<JoinHandle<()>>), ServiceError> {
    let store = Arc::new(Store::open(&config.data_dir)?);
    let (queue, workers) = JobQueue::start(store.clone(), config.workers);
    let recovered = queue.recover(&store)?;
    if recovered > 0 {
        tracing::info!(recovered, "re-queued unfinished jobs");
    }
    let state = Arc::new(AppState { store, queue });
    Ok((router(state, config.max_upload_bytes), workers))
}

pub fn router(state: Arc<AppState>, max_upload_bytes: usize) -> Router {
    use handlers::*;
    Router::new()
        .route("/datasets", post(upload_dataset).get(list_datasets))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/preprocess", post(preprocess_dataset))
        .route("/datasets/{id}/anomalies", get(anomalies))
        .route("/models", post(submit_fit).get(list_jobs))
        .route("/models/{id}", get(get_job))
        .route("/models/{id}/forecast", post(forecast))
        .route("/compare", post(compare))
        .layer(DefaultBodyLimit::max(max_upload_bytes))
        .with_state(state)
}

/// Binds `addr` and serves until `shutdown` resolves.
pub async fn serve(
    config: ServiceConfig,
    addr: SocketAddr,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
    bound: Option<oneshot::Sender<SocketAddr>>,
) -> Result<(), ServiceError> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    let local = listener.local_addr()?;
    let (app, _workers) = build(&config)?;
    tracing::info!(%local, data_dir = %config.data_dir.display(), "listening");
    if let Some(tx) = bound {
        let _ = tx.send(local);
    }
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// A server on its own runtime thread, stopped on drop.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<Result<(), ServiceError>>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> Result<(), ServiceError> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().expect("server thread panicked"),
            None => Ok(()),
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        let _ = self.shutdown_inner();
    }
}

/// Starts the service on a background thread and waits until it is bound.
pub fn start_in_background(
    config: ServiceConfig,
    addr: SocketAddr,
) -> Result<RunningServer, ServiceError> {
    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let (bound_tx, bound_rx) = oneshot::channel();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        rt.block_on(serve(
            config,
            addr,
            async {
                let _ = stop_rx.await;
            },
            Some(bound_tx),
        ))
    });
    match bound_rx.blocking_recv() {
        Ok(addr) => Ok(RunningServer {
            addr,
            shutdown: Some(stop_tx),
            thread: Some(thread),
        }),
        Err(_) => Err(thread
            .join()
            .expect("server thread panicked")
            .err()
            .unwrap_or_else(|| {
                ServiceError::Storage(std::io::Error::other("server stopped before binding"))
            })),
    }
}
