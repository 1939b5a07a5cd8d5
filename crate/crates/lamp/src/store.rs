//! Append-only JSON-lines persistence for policies and enrolled faces.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use lamp_core::dlp::IndexError;
use lamp_core::face::{FaceRecord, FaceVector};
use lamp_core::policy::{LampiPolicy, PolicyId, UserId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

/// A file of one JSON value per line, opened for appending.
#[derive(Debug)]
pub struct JsonlLog {
    path: PathBuf,
    file: File,
}

impl JsonlLog {
    /// Open or create `path` and decode every complete line. Bytes after
    /// the last newline are an interrupted append; they are dropped and
    /// cut from the file so the next append starts on a clean line.
    pub fn open<T: DeserializeOwned>(path: &Path) -> Result<(JsonlLog, Vec<T>), StoreError> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path).map_err(io_err(path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err(path))?;

        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            log::warn!("{}: dropping {} bytes of an unfinished record", path.display(), bytes.len() - complete);
            file.set_len(complete as u64).map_err(io_err(path))?;
        }
        let mut values = Vec::new();
        for (i, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let v = serde_json::from_slice(line).map_err(|e| StoreError::Corrupt {
                path: path.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })?;
            values.push(v);
        }
        Ok((JsonlLog { path: path.to_owned(), file }, values))
    }

    /// Append one record and flush it to disk.
    pub fn append<T: Serialize>(&mut self, value: &T) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(value).expect("log records serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// One line of the policy log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LogRecord {
    Upsert { policy: LampiPolicy },
    Remove { pid: PolicyId },
}

/// Fold log records into the policy map they describe.
pub fn replay<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> BTreeMap<PolicyId, LampiPolicy> {
    let mut map = BTreeMap::new();
    for r in records {
        match r {
            LogRecord::Upsert { policy } => {
                map.insert(policy.pid, policy.clone());
            }
            LogRecord::Remove { pid } => {
                map.remove(pid);
            }
        }
    }
    map
}

#[derive(Debug)]
pub struct PolicyStore {
    log: JsonlLog,
    policies: BTreeMap<PolicyId, LampiPolicy>,
}

impl PolicyStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let (log, records) = JsonlLog::open::<LogRecord>(path)?;
        let policies = replay(&records);
        log::info!("{}: replayed {} records into {} policies", path.display(), records.len(), policies.len());
        Ok(PolicyStore { log, policies })
    }

    pub fn policies(&self) -> &BTreeMap<PolicyId, LampiPolicy> {
        &self.policies
    }

    pub fn get(&self, pid: PolicyId) -> Option<&LampiPolicy> {
        self.policies.get(&pid)
    }

    pub fn insert(&mut self, policy: LampiPolicy) -> Result<(), StoreError> {
        if self.policies.contains_key(&policy.pid) {
            return Err(IndexError::DuplicatePolicyId(policy.pid).into());
        }
        let record = LogRecord::Upsert { policy };
        self.log.append(&record)?;
        let LogRecord::Upsert { policy } = record else { unreachable!() };
        self.policies.insert(policy.pid, policy);
        Ok(())
    }

    pub fn remove(&mut self, pid: PolicyId) -> Result<LampiPolicy, StoreError> {
        if !self.policies.contains_key(&pid) {
            return Err(IndexError::UnknownPolicyId(pid).into());
        }
        self.log.append(&LogRecord::Remove { pid })?;
        Ok(self.policies.remove(&pid).expect("checked above"))
    }

    pub fn path(&self) -> &Path {
        self.log.path()
    }
}

/// Enrolled faces; a later record for the same user replaces the earlier one.
#[derive(Debug)]
pub struct FaceRecords {
    log: JsonlLog,
    faces: HashMap<UserId, FaceVector>,
}

impl FaceRecords {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let (log, records) = JsonlLog::open::<FaceRecord>(path)?;
        let faces = records.into_iter().map(|r| (r.user, r.vector)).collect();
        Ok(FaceRecords { log, faces })
    }

    pub fn enroll(&mut self, record: FaceRecord) -> Result<(), StoreError> {
        self.log.append(&record)?;
        self.faces.insert(record.user, record.vector);
        Ok(())
    }

    pub fn faces(&self) -> &HashMap<UserId, FaceVector> {
        &self.faces
    }
}
