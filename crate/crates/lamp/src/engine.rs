//! The engine behind both the CLI and the HTTP service: persisted
//! policies and faces, the DLP tree over them, and the check pipeline.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use lamp_core::dlp::{DlpTree, IndexError, PhotoLocation};
use lamp_core::enforce::{
    check_photo, CheckError, CheckOutcome, EnforceError, EnforcementReport, Enforcer, PhotoManifest, RecordingRedactor, RedactionDecision,
    Redactor, RedactorError,
};
use lamp_core::face::{FaceError, FaceRecord, FaceVector, Matcher};
use lamp_core::policy::{validate_policy, LampiPolicy, Location, PolicyDocument, PolicyError, PolicyId, UserId};
use lamp_core::taxonomy::{SemanticTaxonomy, TaxonomyError};
use parking_lot::RwLock;
use serde::Deserialize;
use thiserror::Error;

use crate::config::{ConfigError, EngineConfig};
use crate::store::{FaceRecords, PolicyStore, StoreError};

pub const POLICY_LOG: &str = "policies.jsonl";
pub const FACE_LOG: &str = "faces.jsonl";
pub const TAXONOMY_FILE: &str = "taxonomy.json";

/// How an error should be reported: HTTP status class and CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    NotFound,
    Conflict,
    Io,
    Redactor,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Index(IndexError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("policy {pid} uses keyword {keyword:?}, which the new taxonomy lacks")]
    TaxonomyInUse { pid: PolicyId, keyword: String },
    #[error("redactor failed: {error}")]
    RedactorFailure { error: RedactorError, decisions: Vec<RedactionDecision> },
    #[error("{message}")]
    Malformed { code: &'static str, message: String },
    #[error(transparent)]
    Store(StoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Index(e) => EngineError::Index(e),
            other => EngineError::Store(other),
        }
    }
}

impl From<IndexError> for EngineError {
    fn from(e: IndexError) -> Self {
        EngineError::Index(e)
    }
}

impl From<EnforceError> for EngineError {
    fn from(e: EnforceError) -> Self {
        match e {
            EnforceError::Check(e) => EngineError::Check(e),
            EnforceError::RedactorFailure { error, decisions } => EngineError::RedactorFailure { error, decisions },
        }
    }
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Config(ConfigError::Io { .. }) => "IoError",
            EngineError::Config(_) => "InvalidConfig",
            EngineError::Policy(e) => e.code(),
            EngineError::Index(e) => e.code(),
            EngineError::Face(e) => e.code(),
            EngineError::Check(e) => e.code(),
            EngineError::Taxonomy(_) => "InvalidTaxonomy",
            EngineError::TaxonomyInUse { .. } => "TaxonomyInUse",
            EngineError::RedactorFailure { .. } => "RedactorFailure",
            EngineError::Malformed { code, .. } => code,
            EngineError::Store(StoreError::Corrupt { .. }) => "CorruptLog",
            EngineError::Store(_) | EngineError::Io { .. } => "IoError",
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            EngineError::Index(IndexError::UnknownPolicyId(_)) => ErrorKind::NotFound,
            EngineError::Index(IndexError::DuplicatePolicyId(_)) | EngineError::TaxonomyInUse { .. } => ErrorKind::Conflict,
            EngineError::RedactorFailure { .. } => ErrorKind::Redactor,
            EngineError::Config(ConfigError::Io { .. }) | EngineError::Store(_) | EngineError::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Invalid,
        }
    }
}

fn malformed(code: &'static str) -> impl FnOnce(serde_json::Error) -> EngineError {
    move |e| EngineError::Malformed { code, message: e.to_string() }
}

pub fn parse_manifest(json: &str) -> Result<PhotoManifest, EngineError> {
    serde_json::from_str(json).map_err(malformed("MalformedManifest"))
}

pub fn parse_location(json: &str) -> Result<PhotoLocation, EngineError> {
    serde_json::from_str(json).map_err(malformed("MalformedLocation"))
}

#[derive(Deserialize)]
struct FaceRecordDocument {
    user: String,
    vector: Vec<f64>,
}

/// Decode `{user, vector}`. Vector problems keep their own error codes.
pub fn parse_face_record(json: &str) -> Result<FaceRecord, EngineError> {
    let doc: FaceRecordDocument = serde_json::from_str(json).map_err(malformed("MalformedFaceRecord"))?;
    if doc.user.trim().is_empty() {
        return Err(EngineError::Malformed { code: "MalformedFaceRecord", message: "user is empty".into() });
    }
    Ok(FaceRecord { user: UserId::new(doc.user.trim()), vector: FaceVector::new(&doc.vector)? })
}

struct State {
    taxonomy: Arc<SemanticTaxonomy>,
    tree: DlpTree,
    policies: PolicyStore,
    faces: FaceRecords,
}

/// Policies, faces and the index behind one reader-writer lock. Checks
/// are reads; policy, enrollment and taxonomy changes are writes.
pub struct Engine {
    config: EngineConfig,
    matcher: Matcher,
    enforcer: Enforcer,
    state: RwLock<State>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("data_dir", &self.config.data_dir).finish_non_exhaustive()
    }
}

fn read_taxonomy(path: &Path) -> Result<SemanticTaxonomy, EngineError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(SemanticTaxonomy::from_json(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(SemanticTaxonomy::builtin()),
        Err(source) => Err(EngineError::Io { path: path.to_owned(), source }),
    }
}

fn check_policies_against(taxonomy: &SemanticTaxonomy, store: &PolicyStore) -> Result<(), EngineError> {
    for p in store.policies().values() {
        if let Location::Semantic(kw) = &p.loc {
            if taxonomy.id(kw.as_str()).is_none() {
                return Err(EngineError::TaxonomyInUse { pid: p.pid, keyword: kw.to_string() });
            }
        }
    }
    Ok(())
}

impl Engine {
    pub fn open(config: EngineConfig) -> Result<Engine, EngineError> {
        Engine::open_with_redactor(config, Arc::new(RecordingRedactor::new()))
    }

    pub fn open_with_redactor(config: EngineConfig, redactor: Arc<dyn Redactor>) -> Result<Engine, EngineError> {
        config.validate()?;
        let dir = &config.data_dir;
        std::fs::create_dir_all(dir).map_err(|source| EngineError::Io { path: dir.clone(), source })?;
        let taxonomy = Arc::new(read_taxonomy(&dir.join(TAXONOMY_FILE))?);
        let policies = PolicyStore::open(&dir.join(POLICY_LOG))?;
        check_policies_against(&taxonomy, &policies)?;
        let tree = DlpTree::build(taxonomy.clone(), config.tree_config(), policies.policies().values())?;
        let faces = FaceRecords::open(&dir.join(FACE_LOG))?;
        let matcher = Matcher::new(config.tolerances()?, config.workers)?;
        log::info!(
            "engine at {}: {} policies, {} faces, {} keywords",
            dir.display(),
            policies.policies().len(),
            faces.faces().len(),
            taxonomy.len()
        );
        Ok(Engine { config, matcher, enforcer: Enforcer::new(redactor), state: RwLock::new(State { taxonomy, tree, policies, faces }) })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn taxonomy(&self) -> Arc<SemanticTaxonomy> {
        self.state.read().taxonomy.clone()
    }

    pub fn policy_count(&self) -> usize {
        self.state.read().policies.policies().len()
    }

    pub fn face_count(&self) -> usize {
        self.state.read().faces.faces().len()
    }

    /// Validate, log, then index.
    pub fn add_policy(&self, policy: LampiPolicy) -> Result<PolicyId, EngineError> {
        let mut st = self.state.write();
        validate_policy(&policy, &st.taxonomy)?;
        let pid = policy.pid;
        st.policies.insert(policy)?;
        let State { tree, policies, .. } = &mut *st;
        tree.insert(policies.get(pid).expect("just stored"))?;
        Ok(pid)
    }

    pub fn add_policy_json(&self, json: &str) -> Result<PolicyId, EngineError> {
        self.add_policy(PolicyDocument::parse_policy(json)?)
    }

    pub fn remove_policy(&self, pid: PolicyId) -> Result<LampiPolicy, EngineError> {
        let mut st = self.state.write();
        let removed = st.policies.remove(pid)?;
        st.tree.remove(pid)?;
        Ok(removed)
    }

    /// Stored policies in pid order, optionally for one owner.
    pub fn policies(&self, owner: Option<&str>) -> Vec<LampiPolicy> {
        let st = self.state.read();
        st.policies.policies().values().filter(|p| owner.is_none_or(|o| p.owner.as_str() == o)).cloned().collect()
    }

    pub fn enroll(&self, record: FaceRecord) -> Result<(), EngineError> {
        self.state.write().faces.enroll(record)?;
        Ok(())
    }

    /// Matching policies for a location, in pid order.
    pub fn lookup(&self, loc: &PhotoLocation) -> Result<Vec<PolicyId>, EngineError> {
        let mut pids = self.state.read().tree.lookup(loc)?;
        pids.sort_unstable();
        Ok(pids)
    }

    pub fn check(&self, m: &PhotoManifest) -> Result<CheckOutcome, EngineError> {
        let st = self.state.read();
        Ok(check_photo(m, &st.tree, st.faces.faces(), st.policies.policies(), &self.matcher)?)
    }

    pub fn enforce(&self, m: &PhotoManifest) -> Result<EnforcementReport, EngineError> {
        let checked = self.check(m)?;
        Ok(self.enforcer.apply(m, checked)?)
    }

    /// Replace the taxonomy. Refused if a stored policy names a keyword the
    /// new one lacks. The file is replaced atomically and the tree rebuilt.
    pub fn load_taxonomy(&self, taxonomy: SemanticTaxonomy) -> Result<(), EngineError> {
        let mut st = self.state.write();
        check_policies_against(&taxonomy, &st.policies)?;
        let taxonomy = Arc::new(taxonomy);
        let tree = DlpTree::build(taxonomy.clone(), self.config.tree_config(), st.policies.policies().values())?;
        let path = self.config.data_dir.join(TAXONOMY_FILE);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, taxonomy.to_json()).map_err(|source| EngineError::Io { path: tmp.clone(), source })?;
        std::fs::rename(&tmp, &path).map_err(|source| EngineError::Io { path: path.clone(), source })?;
        st.taxonomy = taxonomy;
        st.tree = tree;
        Ok(())
    }

    /// Check the index's internal invariants.
    pub fn verify(&self) -> Result<(), String> {
        self.state.read().tree.verify().map(|_| ())
    }
}
