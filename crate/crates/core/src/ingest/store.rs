use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use super::jsonl::{read_jsonl, write_jsonl, ImportError};
use super::{IssueRecord, RawIssueDocument};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Record { path: PathBuf, source: ImportError },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Append-only log of fetched documents, one JSON object per line.
#[derive(Debug)]
pub struct SessionLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl SessionLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(SessionLog {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends and flushes one document.
    pub fn append(&self, doc: &RawIssueDocument) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(doc).map_err(|source| StoreError::Corrupt {
            path: self.path.clone(),
            source,
        })?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&line)
            .and_then(|_| file.flush())
            .map_err(io_err(&self.path))
    }

    pub fn read_all(path: impl AsRef<Path>) -> Result<Vec<RawIssueDocument>, StoreError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(io_err(path))?;
        let mut docs = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(io_err(path))?;
            if line.is_empty() {
                continue;
            }
            docs.push(
                serde_json::from_str(&line).map_err(|source| StoreError::Corrupt {
                    path: path.to_path_buf(),
                    source,
                })?,
            );
        }
        Ok(docs)
    }
}

/// Normalized records keyed by issue key, one canonical JSON file per issue.
#[derive(Debug)]
pub struct IssueStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

fn file_name_for(key: &str) -> String {
    let mut name = String::with_capacity(key.len() + 5);
    for b in key.bytes() {
        if b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || b == b'.' {
            name.push(b as char);
        } else {
            name.push_str(&format!("%{b:02X}"));
        }
    }
    name.push_str(".json");
    name
}

impl IssueStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(IssueStore {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    /// Inserts or replaces the record stored under its key.
    pub fn put(&self, record: &IssueRecord) -> Result<(), StoreError> {
        let path = self.dir.join(file_name_for(&record.key));
        let tmp = path.with_extension("json.tmp");
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        write_jsonl([record], BufWriter::new(file)).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn get(&self, key: &str) -> Result<Option<IssueRecord>, StoreError> {
        let path = self.dir.join(file_name_for(key));
        if !path.exists() {
            return Ok(None);
        }
        let file = File::open(&path).map_err(io_err(&path))?;
        let mut recs = read_jsonl(BufReader::new(file))
            .map_err(|source| StoreError::Record { path, source })?;
        Ok(recs.pop())
    }

    /// Every stored record, ordered by key.
    pub fn all(&self) -> Result<Vec<IssueRecord>, StoreError> {
        let mut records = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let path = entry.map_err(io_err(&self.dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let file = File::open(&path).map_err(io_err(&path))?;
                let recs = read_jsonl(BufReader::new(file))
                    .map_err(|source| StoreError::Record { path, source })?;
                records.extend(recs);
            }
        }
        records.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(records)
    }

    /// Writes every stored record to `path` as canonical JSONL.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<usize, StoreError> {
        let path = path.as_ref();
        let records = self.all()?;
        let file = File::create(path).map_err(io_err(path))?;
        write_jsonl(&records, BufWriter::new(file)).map_err(io_err(path))?;
        Ok(records.len())
    }
}
