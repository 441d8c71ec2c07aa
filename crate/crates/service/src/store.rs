//! Flat-file persistence: one directory each for datasets, jobs and models.
//!
//! ```text
//! <data>/datasets/<id>.csv   canonical CSV
//! <data>/datasets/<id>.json  DatasetRecord
//! <data>/jobs/<id>.json      FitJob
//! <data>/models/<id>.json    FittedModel, keyed by job id
//! ```

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use hybridcast::preprocess::{AppliedStep, TransformRecord};
use hybridcast::timeseries::ingest_csv;
use hybridcast::{FittedModel, TimeSeries};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jobs::FitJob;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub name: String,
    pub created_at: String,
    pub row_count: usize,
    pub missing_count: usize,
    /// Spacing in seconds.
    pub frequency: i64,
    pub first_timestamp: i64,
    pub last_timestamp: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    /// Steps applied to the parent to derive this dataset.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pipeline: Vec<AppliedStep>,
    /// Every unit-changing record from the root upload to here, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TransformRecord>,
}

/// Hex SHA-256 over the given byte strings, separated so concatenations cannot collide.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        for dir in ["datasets", "jobs", "models"] {
            fs::create_dir_all(root.join(dir))?;
        }
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Serializes writers of one resource.
    pub fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    fn path(&self, dir: &str, id: &str, ext: &str) -> Option<PathBuf> {
        valid_id(id).then(|| self.root.join(dir).join(format!("{id}.{ext}")))
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, path)
    }

    fn read_json<T: DeserializeOwned>(path: Option<PathBuf>) -> io::Result<Option<T>> {
        let Some(path) = path else { return Ok(None) };
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: {e}", path.display()),
                )
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn write_json<T: Serialize>(&self, dir: &str, id: &str, value: &T) -> io::Result<()> {
        let path = self
            .path(dir, id, "json")
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "invalid id"))?;
        let bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        Self::write_atomic(&path, &bytes)
    }

    pub fn dataset(&self, id: &str) -> io::Result<Option<DatasetRecord>> {
        Self::read_json(self.path("datasets", id, "json"))
    }

    /// Persists the CSV and record unless the id already exists; returns the
    /// stored record and whether it was created now.
    pub fn put_dataset(
        &self,
        record: DatasetRecord,
        series: &TimeSeries,
    ) -> io::Result<(DatasetRecord, bool)> {
        let lock = self.lock(&record.id);
        let _guard = lock.lock().expect("dataset lock poisoned");
        if let Some(existing) = self.dataset(&record.id)? {
            return Ok((existing, false));
        }
        let csv = self
            .path("datasets", &record.id, "csv")
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "invalid id"))?;
        Self::write_atomic(&csv, series.to_csv().as_bytes())?;
        self.write_json("datasets", &record.id, &record)?;
        Ok((record, true))
    }

    pub fn dataset_series(&self, id: &str) -> io::Result<Option<TimeSeries>> {
        let Some(path) = self.path("datasets", id, "csv") else {
            return Ok(None);
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        ingest_csv(bytes.as_slice(), "timestamp", "value")
            .map(Some)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
    }

    pub fn datasets(&self) -> io::Result<Vec<DatasetRecord>> {
        let mut out: Vec<DatasetRecord> = Vec::new();
        for entry in fs::read_dir(self.root.join("datasets"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(r) = Self::read_json(Some(path))? {
                    out.push(r);
                }
            }
        }
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(out)
    }

    pub fn job(&self, id: &str) -> io::Result<Option<FitJob>> {
        Self::read_json(self.path("jobs", id, "json"))
    }

    pub fn put_job(&self, job: &FitJob) -> io::Result<()> {
        self.write_json("jobs", &job.id, job)
    }

    pub fn jobs(&self) -> io::Result<Vec<FitJob>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("jobs"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(j) = Self::read_json(Some(path))? {
                    out.push(j);
                }
            }
        }
        Ok(out)
    }

    pub fn model(&self, job_id: &str) -> io::Result<Option<FittedModel>> {
        let Some(path) = self.path("models", job_id, "json") else {
            return Ok(None);
        };
        match fs::read_to_string(&path) {
            Ok(text) => FittedModel::from_json(&text)
                .map(Some)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn put_model(&self, job_id: &str, model: &FittedModel) -> io::Result<()> {
        let path = self
            .path("models", job_id, "json")
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "invalid id"))?;
        let text = model.to_json().map_err(io::Error::other)?;
        Self::write_atomic(&path, text.as_bytes())
    }
}
