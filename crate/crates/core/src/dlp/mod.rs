//! The DLP tree: exact-location policies in an address-keyed B+-tree,
//! semantic-location policies on the keyword taxonomy.

mod exact;
mod naive;
mod semantic;

use std::collections::HashMap;
use std::sync::Arc;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{AddressDocument, ExactAddress, GeoPoint, LampiPolicy, Location, PolicyId, SemanticKeyword};
use crate::taxonomy::{KeywordId, SemanticTaxonomy};

pub use exact::{ExactLeafEntry, ExactShape, NodeRegion};
pub use naive::{location_matches, naive_scan};
pub use semantic::{SemanticEntry, SemanticNode};

use exact::ExactIndex;
use semantic::SemanticIndex;

pub const DEFAULT_FANOUT: usize = 100;
/// Below three, a split can leave one-child nodes and height is unbounded.
pub const MIN_FANOUT: usize = 3;
/// About 50 m in planar degrees.
pub const DEFAULT_POINT_EPSILON: f64 = 0.0005;
pub const MAX_PHOTO_KEYWORDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub fanout: usize,
    pub point_epsilon: f64,
    /// Reject photo keywords missing from the taxonomy instead of skipping them.
    pub strict_keywords: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { fanout: DEFAULT_FANOUT, point_epsilon: DEFAULT_POINT_EPSILON, strict_keywords: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("policy {0} is already indexed")]
    DuplicatePolicyId(PolicyId),
    #[error("policy {0} is not indexed")]
    UnknownPolicyId(PolicyId),
    #[error("keyword {0:?} is not in the taxonomy")]
    UnknownKeyword(String),
}

impl IndexError {
    pub fn code(&self) -> &'static str {
        match self {
            IndexError::DuplicatePolicyId(_) => "DuplicatePolicyId",
            IndexError::UnknownPolicyId(_) => "UnknownPolicyId",
            IndexError::UnknownKeyword(_) => "UnknownKeyword",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocationError {
    #[error("photo location needs an address, a point, or at least one keyword")]
    Empty,
    #[error("photo carries {0} keywords, at most {MAX_PHOTO_KEYWORDS} are allowed")]
    TooManyKeywords(usize),
    #[error("malformed photo address {0}")]
    MalformedAddress(String),
    #[error("malformed photo location: {0}")]
    Format(String),
}

impl LocationError {
    pub fn code(&self) -> &'static str {
        match self {
            LocationError::MalformedAddress(_) => "MalformedAddress",
            _ => "MalformedLocation",
        }
    }
}

/// Where and when a photo was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LocationDocument", into = "LocationDocument")]
pub struct PhotoLocation {
    pub address: Option<ExactAddress>,
    pub point: Option<GeoPoint>,
    pub keywords: Vec<SemanticKeyword>,
    pub timestamp: NaiveDateTime,
}

impl PhotoLocation {
    pub fn at(timestamp: NaiveDateTime) -> Self {
        PhotoLocation { address: None, point: None, keywords: Vec::new(), timestamp }
    }

    pub fn with_address(mut self, address: ExactAddress) -> Self {
        self.address = Some(address);
        self
    }

    pub fn with_point(mut self, point: GeoPoint) -> Self {
        self.point = Some(point);
        self
    }

    pub fn with_keyword(mut self, keyword: &str) -> Self {
        self.keywords.push(SemanticKeyword::new(keyword));
        self
    }

    pub fn validate(&self) -> Result<(), LocationError> {
        if self.address.is_none() && self.point.is_none() && self.keywords.is_empty() {
            return Err(LocationError::Empty);
        }
        if self.keywords.len() > MAX_PHOTO_KEYWORDS {
            return Err(LocationError::TooManyKeywords(self.keywords.len()));
        }
        if let Some(a) = &self.address {
            if !a.is_well_formed() {
                return Err(LocationError::MalformedAddress(a.to_string()));
            }
        }
        Ok(())
    }
}

/// Wire form: flat address fields, `lat`/`lon`, `keywords`, `timestamp`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocationDocument {
    #[serde(flatten)]
    pub place: AddressDocument,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub timestamp: String,
}

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime, String> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| format!("bad timestamp {s:?}, expected YYYY-MM-DDTHH:MM[:SS]"))
}

impl TryFrom<LocationDocument> for PhotoLocation {
    type Error = String;

    fn try_from(doc: LocationDocument) -> Result<Self, Self::Error> {
        let point = doc.place.point()?;
        // The photo's coordinates describe the photo, not the address.
        let address = doc.place.address()?.map(|a| ExactAddress::new(a.street(), a.city(), a.state(), a.nation()));
        Ok(PhotoLocation {
            address,
            point,
            keywords: doc.keywords.iter().map(|k| SemanticKeyword::new(k)).collect(),
            timestamp: parse_timestamp(&doc.timestamp)?,
        })
    }
}

impl From<PhotoLocation> for LocationDocument {
    fn from(loc: PhotoLocation) -> Self {
        let mut place = loc.address.map(AddressDocument::from).unwrap_or_default();
        place.lat = loc.point.map(|p| p.lat);
        place.lon = loc.point.map(|p| p.lon);
        LocationDocument {
            place,
            keywords: loc.keywords.iter().map(|k| k.as_str().to_owned()).collect(),
            timestamp: loc.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Exact,
    Semantic(KeywordId),
}

/// Combined shape of both sides, from [`DlpTree::verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub exact: ExactShape,
    pub semantic_entries: usize,
}

#[derive(Debug)]
pub struct DlpTree {
    config: TreeConfig,
    taxonomy: Arc<SemanticTaxonomy>,
    exact: ExactIndex,
    semantic: SemanticIndex,
    /// pid → where it lives, and for exact policies the key needed to find it.
    slots: HashMap<PolicyId, (Slot, Option<ExactAddress>)>,
}

impl DlpTree {
    pub fn new(taxonomy: Arc<SemanticTaxonomy>, config: TreeConfig) -> Self {
        DlpTree { exact: ExactIndex::new(config.fanout), semantic: SemanticIndex::new(&taxonomy), taxonomy, config, slots: HashMap::new() }
    }

    pub fn build<'a>(
        taxonomy: Arc<SemanticTaxonomy>,
        config: TreeConfig,
        policies: impl IntoIterator<Item = &'a LampiPolicy>,
    ) -> Result<Self, IndexError> {
        let mut tree = DlpTree::new(taxonomy, config);
        for p in policies {
            tree.insert(p)?;
        }
        Ok(tree)
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn taxonomy(&self) -> &Arc<SemanticTaxonomy> {
        &self.taxonomy
    }

    pub fn policy_count(&self) -> usize {
        self.slots.len()
    }

    pub fn exact_count(&self) -> usize {
        self.exact.len()
    }

    pub fn semantic_count(&self) -> usize {
        self.semantic.len()
    }

    pub fn contains(&self, pid: PolicyId) -> bool {
        self.slots.contains_key(&pid)
    }

    /// Height of the exact side; a lone leaf is height 1.
    pub fn height(&self) -> usize {
        self.exact.height()
    }

    pub fn insert(&mut self, p: &LampiPolicy) -> Result<(), IndexError> {
        if self.slots.contains_key(&p.pid) {
            return Err(IndexError::DuplicatePolicyId(p.pid));
        }
        match &p.loc {
            Location::Exact(address) => {
                self.exact.insert(ExactLeafEntry { address: address.clone(), gamma: p.int, pid: p.pid });
                self.slots.insert(p.pid, (Slot::Exact, Some(address.clone())));
            }
            Location::Semantic(kw) => {
                let k = self.taxonomy.id(kw.as_str()).ok_or_else(|| IndexError::UnknownKeyword(kw.to_string()))?;
                self.semantic.insert(k, SemanticEntry { pid: p.pid, gamma: p.int });
                self.slots.insert(p.pid, (Slot::Semantic(k), None));
            }
        }
        Ok(())
    }

    pub fn remove(&mut self, pid: PolicyId) -> Result<(), IndexError> {
        let (slot, address) = self.slots.remove(&pid).ok_or(IndexError::UnknownPolicyId(pid))?;
        let removed = match slot {
            Slot::Exact => self.exact.remove(address.as_ref().expect("exact slot keeps its address"), pid),
            Slot::Semantic(k) => self.semantic.remove(k, pid),
        };
        debug_assert!(removed, "slot map and index disagree about {pid}");
        Ok(())
    }

    /// Exact-location policies for a photo. With an address, policies whose
    /// address equals it or any coarser prefix of it (a whole city, say)
    /// match. With only a point, policies with a stored point within
    /// `point_epsilon` match.
    pub fn lookup_exact(&self, address: Option<&ExactAddress>, point: Option<&GeoPoint>, t: NaiveDateTime) -> Vec<PolicyId> {
        let mut out = Vec::new();
        self.collect_exact(address, point, t, &mut out);
        finish(out)
    }

    fn collect_exact(&self, address: Option<&ExactAddress>, point: Option<&GeoPoint>, t: NaiveDateTime, out: &mut Vec<PolicyId>) {
        match (address, point) {
            (Some(a), _) => {
                for prefix in a.prefixes() {
                    self.exact.collect_address(&prefix, t, out);
                }
            }
            (None, Some(p)) => self.exact.collect_point(p, self.config.point_epsilon, t, out),
            (None, None) => {}
        }
    }

    /// Policies at `keyword` and at each of its ancestors.
    pub fn lookup_semantic(&self, keyword: &str, t: NaiveDateTime) -> Result<Vec<PolicyId>, IndexError> {
        let k = self.taxonomy.id(keyword).ok_or_else(|| IndexError::UnknownKeyword(keyword.to_owned()))?;
        let mut out = Vec::new();
        self.semantic.collect_upward(k, t, &mut Vec::new(), &mut out);
        Ok(finish(out))
    }

    /// All policies that apply to a photo taken at `loc`, each once, in
    /// traversal order: exact prefixes from the nation down, then each
    /// keyword's chain from the keyword up.
    pub fn lookup(&self, loc: &PhotoLocation) -> Result<Vec<PolicyId>, IndexError> {
        let mut out = Vec::new();
        self.collect_exact(loc.address.as_ref(), loc.point.as_ref(), loc.timestamp, &mut out);
        let mut visited = Vec::new();
        for kw in &loc.keywords {
            match self.taxonomy.id(kw.as_str()) {
                Some(k) => self.semantic.collect_upward(k, loc.timestamp, &mut visited, &mut out),
                None if self.config.strict_keywords => return Err(IndexError::UnknownKeyword(kw.to_string())),
                None => log::debug!("skipping unknown photo keyword {kw:?}"),
            }
        }
        Ok(finish(out))
    }

    pub fn semantic_node(&self, keyword: &str) -> Option<&SemanticNode> {
        self.taxonomy.id(keyword).map(|k| self.semantic.node(k))
    }

    /// Exact-side leaf entries in key order.
    pub fn exact_entries(&self) -> Vec<&ExactLeafEntry> {
        self.exact.entries()
    }

    /// Walk the whole structure and check its invariants.
    pub fn verify(&self) -> Result<TreeShape, String> {
        let exact = self.exact.verify()?;
        let semantic_entries: usize = self.taxonomy.ids().map(|k| self.semantic.node(k).policies.len()).sum();
        if exact.entries + semantic_entries != self.slots.len() {
            return Err(format!(
                "{} exact + {} semantic entries but {} policies recorded",
                exact.entries,
                semantic_entries,
                self.slots.len()
            ));
        }
        Ok(TreeShape { exact, semantic_entries })
    }
}

/// Every pid lives in exactly one leaf entry or semantic node, and a
/// lookup visits each of those at most once, so the output is already a
/// set. It stays in traversal order; sorting it would cost more than the
/// traversal on large result sets.
fn finish(out: Vec<PolicyId>) -> Vec<PolicyId> {
    out
}
