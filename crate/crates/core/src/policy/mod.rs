//! LAMPi policies: which location a user considers sensitive, when, and how
//! strongly.

mod address;
mod interval;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::SemanticTaxonomy;

pub use address::{normalize_text, point_matches, AddressDocument, BBox, ExactAddress, GeoPoint, Region};
pub use interval::{interval_contains, DailyWindow, DateRange, IntervalDocument, TimeInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyId(pub u64);

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(Arc<str>);

impl UserId {
    pub fn new(id: impl AsRef<str>) -> Self {
        UserId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId::new(s)
    }
}

/// How much the user cares about exposure at the location.
///
/// `High` protects even weakly identifiable faces (wider match tolerance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sensitiveness {
    Low,
    High,
}

/// `E` for an exact address, `S` for a semantic keyword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationType {
    E,
    S,
}

/// Lowercase place-category keyword, e.g. `bar` or `entertainment`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct SemanticKeyword(Arc<str>);

impl SemanticKeyword {
    pub fn new(s: &str) -> Self {
        SemanticKeyword(Arc::from(normalize_text(s)))
    }

    /// Wrap an already-normalized shared string.
    pub fn from_shared(s: Arc<str>) -> Self {
        if normalize_text(&s) == *s {
            SemanticKeyword(s)
        } else {
            SemanticKeyword::new(&s)
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for SemanticKeyword {
    fn from(s: String) -> Self {
        SemanticKeyword::new(&s)
    }
}

impl From<SemanticKeyword> for String {
    fn from(k: SemanticKeyword) -> Self {
        k.0.to_string()
    }
}

impl fmt::Display for SemanticKeyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Serialized as an address object for exact locations, a bare string for keywords.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Exact(ExactAddress),
    Semantic(SemanticKeyword),
}

impl Location {
    pub fn kind(&self) -> LocationType {
        match self {
            Location::Exact(_) => LocationType::E,
            Location::Semantic(_) => LocationType::S,
        }
    }
}

/// One user's declaration that a location is sensitive during an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LampiPolicy {
    pub pid: PolicyId,
    pub owner: UserId,
    pub typ: LocationType,
    pub loc: Location,
    pub int: TimeInterval,
    pub xi: Sensitiveness,
}

impl LampiPolicy {
    pub fn exact(pid: u64, owner: &str, address: ExactAddress, int: TimeInterval, xi: Sensitiveness) -> Self {
        LampiPolicy { pid: PolicyId(pid), owner: owner.into(), typ: LocationType::E, loc: Location::Exact(address), int, xi }
    }

    pub fn semantic(pid: u64, owner: &str, keyword: &str, int: TimeInterval, xi: Sensitiveness) -> Self {
        LampiPolicy {
            pid: PolicyId(pid),
            owner: owner.into(),
            typ: LocationType::S,
            loc: Location::Semantic(SemanticKeyword::new(keyword)),
            int,
            xi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("keyword {0:?} is not in the taxonomy")]
    UnknownKeyword(String),
    #[error("malformed address: {0}")]
    MalformedAddress(String),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("location type {typ:?} does not match the location given")]
    TypeLocationMismatch { typ: LocationType },
    #[error("malformed policy document: {0}")]
    Malformed(String),
}

impl PolicyError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::UnknownKeyword(_) => "UnknownKeyword",
            PolicyError::MalformedAddress(_) => "MalformedAddress",
            PolicyError::InvalidInterval(_) => "InvalidInterval",
            PolicyError::TypeLocationMismatch { .. } => "TypeLocationMismatch",
            PolicyError::Malformed(_) => "MalformedPolicy",
        }
    }
}

pub fn validate_policy(p: &LampiPolicy, taxonomy: &SemanticTaxonomy) -> Result<(), PolicyError> {
    if p.typ != p.loc.kind() {
        return Err(PolicyError::TypeLocationMismatch { typ: p.typ });
    }
    match &p.loc {
        Location::Exact(addr) if !addr.is_well_formed() => {
            return Err(PolicyError::MalformedAddress(format!("{addr:?}")));
        }
        Location::Semantic(kw) if taxonomy.id(kw.as_str()).is_none() => {
            return Err(PolicyError::UnknownKeyword(kw.to_string()));
        }
        _ => {}
    }
    if !p.int.is_valid() {
        return Err(PolicyError::InvalidInterval(format!("{:?}", p.int)));
    }
    Ok(())
}

/// Loosely-typed wire form of a policy, so decode problems map to error codes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub pid: u64,
    pub owner: String,
    pub typ: String,
    pub loc: serde_json::Value,
    pub int: IntervalDocument,
    pub xi: String,
}

impl PolicyDocument {
    /// Decode into a policy. Structural problems are reported with the same
    /// codes [`validate_policy`] uses; taxonomy checks are left to it.
    pub fn into_policy(self) -> Result<LampiPolicy, PolicyError> {
        let typ = match self.typ.trim() {
            "E" | "e" => LocationType::E,
            "S" | "s" => LocationType::S,
            other => return Err(PolicyError::Malformed(format!("typ must be \"E\" or \"S\", got {other:?}"))),
        };
        let xi = match self.xi.trim().to_ascii_lowercase().as_str() {
            "high" => Sensitiveness::High,
            "low" => Sensitiveness::Low,
            other => return Err(PolicyError::Malformed(format!("xi must be \"High\" or \"Low\", got {other:?}"))),
        };
        let loc = match self.loc {
            serde_json::Value::String(s) => Location::Semantic(SemanticKeyword::new(&s)),
            v @ serde_json::Value::Object(_) => {
                let doc: AddressDocument = serde_json::from_value(v).map_err(|e| PolicyError::MalformedAddress(e.to_string()))?;
                Location::Exact(ExactAddress::try_from(doc).map_err(PolicyError::MalformedAddress)?)
            }
            other => return Err(PolicyError::Malformed(format!("loc must be an object or string, got {other}"))),
        };
        let int = self.int.parse().map_err(PolicyError::InvalidInterval)?;
        if self.owner.trim().is_empty() {
            return Err(PolicyError::Malformed("owner is empty".into()));
        }
        Ok(LampiPolicy { pid: PolicyId(self.pid), owner: UserId::new(self.owner.trim()), typ, loc, int, xi })
    }

    /// Parse JSON text and decode. JSON syntax errors come back as `Malformed`.
    pub fn parse_policy(json: &str) -> Result<LampiPolicy, PolicyError> {
        let doc: PolicyDocument = serde_json::from_str(json).map_err(|e| PolicyError::Malformed(e.to_string()))?;
        doc.into_policy()
    }
}
