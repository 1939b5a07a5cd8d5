//! Where redaction decisions leave the engine. A real platform plugs its
//! face-replacement pipeline in here.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RedactionDecision;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactorAck {
    pub photo_id: String,
    pub faces_replaced: usize,
    /// The same decision list was already applied to this photo.
    pub already_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{0}")]
pub struct RedactorError(pub String);

pub trait Redactor: Send + Sync {
    /// Must be idempotent for a repeated `(photo_id, decisions)` pair.
    fn apply(&self, photo_id: &str, decisions: &[RedactionDecision]) -> Result<RedactorAck, RedactorError>;
}

fn distinct_faces(decisions: &[RedactionDecision]) -> usize {
    let mut idx: Vec<u32> = decisions.iter().map(|d| d.face_index).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.len()
}

/// Keeps the latest decision list per photo instead of touching pixels.
#[derive(Debug, Default)]
pub struct RecordingRedactor {
    applied: Mutex<HashMap<String, Vec<RedactionDecision>>>,
}

impl RecordingRedactor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn recorded(&self, photo_id: &str) -> Option<Vec<RedactionDecision>> {
        self.applied.lock().unwrap_or_else(|e| e.into_inner()).get(photo_id).cloned()
    }

    pub fn photos(&self) -> usize {
        self.applied.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl Redactor for RecordingRedactor {
    fn apply(&self, photo_id: &str, decisions: &[RedactionDecision]) -> Result<RedactorAck, RedactorError> {
        let mut applied = self.applied.lock().unwrap_or_else(|e| e.into_inner());
        let already_applied = applied.get(photo_id).is_some_and(|prev| prev == decisions);
        if !already_applied {
            applied.insert(photo_id.to_owned(), decisions.to_vec());
        }
        Ok(RedactorAck { photo_id: photo_id.to_owned(), faces_replaced: distinct_faces(decisions), already_applied })
    }
}

/// Always fails; for exercising error paths.
#[derive(Debug, Clone)]
pub struct FailingRedactor(pub String);

impl Redactor for FailingRedactor {
    fn apply(&self, _photo_id: &str, _decisions: &[RedactionDecision]) -> Result<RedactorAck, RedactorError> {
        Err(RedactorError(self.0.clone()))
    }
}
