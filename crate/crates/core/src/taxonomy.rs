//! Semantic place taxonomy: a keyword tree rooted at `any place`, at most
//! four levels deep.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::normalize_text;

pub const ROOT_KEYWORD: &str = "any place";
/// Marker used as the parent of the root row in taxonomy files.
pub const ROOT_PARENT: &str = "ROOT";
/// Maximum number of levels, root included.
pub const MAX_LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeywordId(pub u32);

impl KeywordId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("duplicate keyword {0:?}")]
    DuplicateKeyword(String),
    #[error("keyword {keyword:?} names unknown parent {parent:?}")]
    UnknownParent { keyword: String, parent: String },
    #[error("taxonomy must have exactly one root row ({ROOT_KEYWORD:?} with parent {ROOT_PARENT:?}), found {0}")]
    RootCount(usize),
    #[error("root keyword must be {ROOT_KEYWORD:?}, got {0:?}")]
    WrongRoot(String),
    #[error("keyword {0:?} is not connected to the root")]
    Cycle(String),
    #[error("keyword {0:?} is deeper than {MAX_LEVELS} levels")]
    TooDeep(String),
    #[error("taxonomy file: {0}")]
    Format(String),
}

#[derive(Debug, Clone)]
struct TaxonomyNode {
    keyword: Arc<str>,
    parent: Option<KeywordId>,
    depth: u8,
}

/// One row of a taxonomy file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaxonomyRow {
    Pair(String, String),
    Named { keyword: String, parent: String },
}

impl TaxonomyRow {
    fn into_pair(self) -> (String, String) {
        match self {
            TaxonomyRow::Pair(k, p) | TaxonomyRow::Named { keyword: k, parent: p } => (k, p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SemanticTaxonomy {
    nodes: Vec<TaxonomyNode>,
    index: HashMap<Arc<str>, KeywordId>,
    root: KeywordId,
}

impl SemanticTaxonomy {
    /// Build from `(keyword, parent)` rows in any order. The root row has parent `ROOT`.
    pub fn from_pairs<I, K, P>(rows: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = (K, P)>,
        K: AsRef<str>,
        P: AsRef<str>,
    {
        let mut names = Vec::new();
        let mut parents = Vec::new();
        let mut index: HashMap<Arc<str>, KeywordId> = HashMap::new();
        for (k, p) in rows {
            let keyword: Arc<str> = Arc::from(normalize_text(k.as_ref()));
            let id = KeywordId(names.len() as u32);
            if index.insert(keyword.clone(), id).is_some() {
                return Err(TaxonomyError::DuplicateKeyword(keyword.to_string()));
            }
            names.push(keyword);
            let p = p.as_ref().trim();
            parents.push(if p == ROOT_PARENT { None } else { Some(normalize_text(p)) });
        }

        let roots: Vec<usize> = parents.iter().enumerate().filter(|(_, p)| p.is_none()).map(|(i, _)| i).collect();
        if roots.len() != 1 {
            return Err(TaxonomyError::RootCount(roots.len()));
        }
        let root = KeywordId(roots[0] as u32);
        if &*names[root.index()] != ROOT_KEYWORD {
            return Err(TaxonomyError::WrongRoot(names[root.index()].to_string()));
        }

        let mut nodes = Vec::with_capacity(names.len());
        for (keyword, parent) in names.iter().zip(&parents) {
            let parent = match parent {
                None => None,
                Some(p) => Some(
                    *index
                        .get(p.as_str())
                        .ok_or_else(|| TaxonomyError::UnknownParent { keyword: keyword.to_string(), parent: p.clone() })?,
                ),
            };
            nodes.push(TaxonomyNode { keyword: keyword.clone(), parent, depth: 0 });
        }

        // Depth by walking parents; a walk longer than the node count is a cycle.
        for i in 0..nodes.len() {
            let mut depth = 0usize;
            let mut cur = nodes[i].parent;
            while let Some(p) = cur {
                depth += 1;
                if depth > nodes.len() {
                    return Err(TaxonomyError::Cycle(nodes[i].keyword.to_string()));
                }
                cur = nodes[p.index()].parent;
            }
            if depth + 1 > MAX_LEVELS {
                return Err(TaxonomyError::TooDeep(nodes[i].keyword.to_string()));
            }
            nodes[i].depth = depth as u8;
        }

        Ok(SemanticTaxonomy { nodes, index, root })
    }

    /// Parse a JSON array of `[keyword, parent]` pairs (or `{keyword, parent}` objects).
    pub fn from_json(json: &str) -> Result<Self, TaxonomyError> {
        let rows: Vec<TaxonomyRow> = serde_json::from_str(json).map_err(|e| TaxonomyError::Format(e.to_string()))?;
        Self::from_pairs(rows.into_iter().map(TaxonomyRow::into_pair))
    }

    pub fn to_rows(&self) -> Vec<TaxonomyRow> {
        self.nodes
            .iter()
            .map(|n| {
                let parent = n.parent.map_or(ROOT_PARENT.to_owned(), |p| self.nodes[p.index()].keyword.to_string());
                TaxonomyRow::Pair(n.keyword.to_string(), parent)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_rows()).expect("rows serialize")
    }

    /// A small hand-written taxonomy covering the usual place categories.
    pub fn builtin() -> Self {
        const ROWS: &[(&str, &str)] = &[
            (ROOT_KEYWORD, ROOT_PARENT),
            ("entertainment", ROOT_KEYWORD),
            ("nightlife", "entertainment"),
            ("bar", "nightlife"),
            ("pub", "nightlife"),
            ("night club", "nightlife"),
            ("shopping", "entertainment"),
            ("shopping mall", "shopping"),
            ("market", "shopping"),
            ("sports", "entertainment"),
            ("gym", "sports"),
            ("stadium", "sports"),
            ("medical", ROOT_KEYWORD),
            ("hospital", "medical"),
            ("clinic", "medical"),
            ("urgent care", "medical"),
            ("education", ROOT_KEYWORD),
            ("university", "education"),
            ("school", "education"),
            ("religion", ROOT_KEYWORD),
            ("church", "religion"),
            ("mosque", "religion"),
            ("temple", "religion"),
            ("work", ROOT_KEYWORD),
            ("company", "work"),
            ("government office", "work"),
        ];
        Self::from_pairs(ROWS.iter().copied()).expect("builtin taxonomy is well formed")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> KeywordId {
        self.root
    }

    pub fn id(&self, keyword: &str) -> Option<KeywordId> {
        self.index.get(keyword).copied()
    }

    pub fn keyword(&self, id: KeywordId) -> &str {
        &self.nodes[id.index()].keyword
    }

    pub fn keyword_arc(&self, id: KeywordId) -> Arc<str> {
        self.nodes[id.index()].keyword.clone()
    }

    pub fn parent(&self, id: KeywordId) -> Option<KeywordId> {
        self.nodes[id.index()].parent
    }

    /// Distance from the root (root is 0).
    pub fn depth(&self, id: KeywordId) -> usize {
        self.nodes[id.index()].depth as usize
    }

    pub fn ids(&self) -> impl Iterator<Item = KeywordId> + '_ {
        (0..self.nodes.len() as u32).map(KeywordId)
    }

    /// `id` followed by each of its ancestors up to the root.
    pub fn ancestors_or_self(&self, id: KeywordId) -> impl Iterator<Item = KeywordId> + '_ {
        std::iter::successors(Some(id), move |&k| self.parent(k))
    }

    pub fn is_ancestor_or_self(&self, ancestor: KeywordId, of: KeywordId) -> bool {
        self.ancestors_or_self(of).any(|k| k == ancestor)
    }

    pub fn children(&self, id: KeywordId) -> impl Iterator<Item = KeywordId> + '_ {
        self.ids().filter(move |&k| self.parent(k) == Some(id))
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth as usize).max().unwrap_or(0)
    }
}
