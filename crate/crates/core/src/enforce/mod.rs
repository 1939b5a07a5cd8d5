//! Upload-time check: find the policies that apply where and when a photo
//! was taken, match their owners' faces, and decide which faces to replace.

mod redactor;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlp::{DlpTree, IndexError, LocationError, PhotoLocation};
use crate::face::{Candidate, FaceVector, Matcher, PhotoFace};
use crate::policy::{LampiPolicy, PolicyId, Sensitiveness, UserId};

pub use redactor::{FailingRedactor, RecordingRedactor, Redactor, RedactorAck, RedactorError};

/// Everything the engine knows about an uploaded photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoManifest {
    pub photo_id: String,
    pub uploader: UserId,
    pub location: PhotoLocation,
    #[serde(default)]
    pub faces: Vec<PhotoFace>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("photo_id is empty")]
    MissingPhotoId,
    #[error("face indices must run 0..{expected} without gaps or repeats")]
    FaceIndices { expected: usize },
    #[error(transparent)]
    Location(#[from] LocationError),
}

impl PhotoManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.photo_id.trim().is_empty() {
            return Err(ManifestError::MissingPhotoId);
        }
        self.location.validate()?;
        let mut seen = vec![false; self.faces.len()];
        for f in &self.faces {
            match seen.get_mut(f.index as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(ManifestError::FaceIndices { expected: self.faces.len() }),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RedactionAction {
    ReplaceFace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedactionDecision {
    pub face_index: u32,
    pub protected_user: UserId,
    pub triggering_policy: PolicyId,
    pub action: RedactionAction,
    pub distance: f64,
}

/// A retrieved policy that could not take part in matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    /// The owner has not enrolled a face.
    MissingFaceRecord { pid: PolicyId, owner: UserId },
    /// The index returned a pid the policy store does not hold.
    MissingPolicy { pid: PolicyId },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub retrieval_ms: f64,
    pub matching_ms: f64,
    pub redaction_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    /// Sorted by face index, then user.
    pub decisions: Vec<RedactionDecision>,
    pub diagnostics: Vec<Diagnostic>,
    pub retrieved: Vec<PolicyId>,
    pub candidates: usize,
    pub comparisons: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

impl CheckError {
    pub fn code(&self) -> &'static str {
        match self {
            CheckError::Manifest(ManifestError::Location(e)) => e.code(),
            CheckError::Manifest(_) => "MalformedManifest",
            CheckError::Index(e) => e.code(),
        }
    }
}

/// Read access to enrolled faces.
pub trait FaceStore {
    fn face(&self, user: &UserId) -> Option<&FaceVector>;
}

/// Read access to stored policies.
pub trait PolicySource {
    fn policy(&self, pid: PolicyId) -> Option<&LampiPolicy>;
}

impl FaceStore for HashMap<UserId, FaceVector> {
    fn face(&self, user: &UserId) -> Option<&FaceVector> {
        self.get(user)
    }
}

impl FaceStore for BTreeMap<UserId, FaceVector> {
    fn face(&self, user: &UserId) -> Option<&FaceVector> {
        self.get(user)
    }
}

impl PolicySource for HashMap<PolicyId, LampiPolicy> {
    fn policy(&self, pid: PolicyId) -> Option<&LampiPolicy> {
        self.get(&pid)
    }
}

impl PolicySource for BTreeMap<PolicyId, LampiPolicy> {
    fn policy(&self, pid: PolicyId) -> Option<&LampiPolicy> {
        self.get(&pid)
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Decide which faces in the photo must be replaced.
///
/// Each owner is matched once, at the widest tolerance among their
/// retrieved policies. A matched face is then attributed to the owner's
/// strictest policy that still fires at that distance.
pub fn check_photo<F: FaceStore, P: PolicySource>(
    m: &PhotoManifest,
    tree: &DlpTree,
    faces: &F,
    policies: &P,
    matcher: &Matcher,
) -> Result<CheckOutcome, CheckError> {
    m.validate()?;

    let started = Instant::now();
    let mut retrieved = tree.lookup(&m.location)?;
    let retrieval_ms = ms_since(started);
    retrieved.sort_unstable();

    let started = Instant::now();
    let mut diagnostics = Vec::new();
    let mut by_owner: BTreeMap<&UserId, Vec<&LampiPolicy>> = BTreeMap::new();
    for &pid in &retrieved {
        match policies.policy(pid) {
            Some(p) => by_owner.entry(&p.owner).or_default().push(p),
            None => {
                log::warn!("index returned {pid} but the policy store does not hold it");
                diagnostics.push(Diagnostic::MissingPolicy { pid });
            }
        }
    }

    let mut candidates = Vec::with_capacity(by_owner.len());
    for (owner, owned) in &by_owner {
        match faces.face(owner) {
            Some(vector) => {
                let xi = owned.iter().map(|p| p.xi).max().unwrap_or(Sensitiveness::Low);
                candidates.push(Candidate { user: owner, vector, xi });
            }
            None => {
                log::warn!("{owner} has policies here but no enrolled face; skipping");
                diagnostics.extend(owned.iter().map(|p| Diagnostic::MissingFaceRecord { pid: p.pid, owner: (*owner).clone() }));
            }
        }
    }

    let outcome = matcher.match_candidates(&m.faces, &candidates);
    let tolerances = matcher.tolerances();
    let decisions = outcome
        .matches
        .into_iter()
        .map(|hit| {
            let trigger = by_owner[&hit.user]
                .iter()
                .map(|p| (tolerances.for_xi(p.xi).max_distance, p.pid))
                .filter(|(tol, _)| hit.distance < *tol)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("the widest tolerance fired, so some policy does");
            RedactionDecision {
                face_index: hit.face_index,
                protected_user: hit.user,
                triggering_policy: trigger.1,
                action: RedactionAction::ReplaceFace,
                distance: hit.distance,
            }
        })
        .collect();
    let matching_ms = ms_since(started);

    Ok(CheckOutcome {
        decisions,
        diagnostics,
        retrieved,
        candidates: candidates.len(),
        comparisons: outcome.comparisons,
        timings: StageTimings { retrieval_ms, matching_ms, redaction_ms: 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnforcementReport {
    pub photo_id: String,
    pub decisions: Vec<RedactionDecision>,
    pub diagnostics: Vec<Diagnostic>,
    pub redactor_ack: RedactorAck,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnforceError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("redactor failed: {error}")]
    RedactorFailure { error: RedactorError, decisions: Vec<RedactionDecision> },
}

impl EnforceError {
    pub fn code(&self) -> &'static str {
        match self {
            EnforceError::Check(e) => e.code(),
            EnforceError::RedactorFailure { .. } => "RedactorFailure",
        }
    }
}

/// Runs checks and hands decisions to a redactor, one photo at a time per id.
pub struct Enforcer {
    redactor: Arc<dyn Redactor>,
    photo_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl std::fmt::Debug for Enforcer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Enforcer").finish_non_exhaustive()
    }
}

impl Enforcer {
    pub fn new(redactor: Arc<dyn Redactor>) -> Self {
        Enforcer { redactor, photo_locks: Mutex::new(HashMap::new()) }
    }

    pub fn redactor(&self) -> &Arc<dyn Redactor> {
        &self.redactor
    }

    pub fn enforce<F: FaceStore, P: PolicySource>(
        &self,
        m: &PhotoManifest,
        tree: &DlpTree,
        faces: &F,
        policies: &P,
        matcher: &Matcher,
    ) -> Result<EnforcementReport, EnforceError> {
        let checked = check_photo(m, tree, faces, policies, matcher)?;
        self.apply(m, checked)
    }

    /// Hand an already computed check to the redactor.
    pub fn apply(&self, m: &PhotoManifest, checked: CheckOutcome) -> Result<EnforcementReport, EnforceError> {
        let lock = {
            let mut locks = self.photo_locks.lock().unwrap_or_else(|e| e.into_inner());
            locks.entry(m.photo_id.clone()).or_default().clone()
        };
        let _held = lock.lock().unwrap_or_else(|e| e.into_inner());

        let started = Instant::now();
        let ack = self.redactor.apply(&m.photo_id, &checked.decisions);
        let redaction_ms = ms_since(started);
        match ack {
            Ok(redactor_ack) => Ok(EnforcementReport {
                photo_id: m.photo_id.clone(),
                decisions: checked.decisions,
                diagnostics: checked.diagnostics,
                redactor_ack,
                timings: StageTimings { redaction_ms, ..checked.timings },
            }),
            Err(error) => Err(EnforceError::RedactorFailure { error, decisions: checked.decisions }),
        }
    }
}
