//! Semantic-location side: one node per taxonomy keyword, each with the
//! policies attached at that keyword. Lookups climb parent pointers.

use chrono::{Datelike, NaiveDateTime, NaiveTime, Timelike};

use crate::policy::{PolicyId, TimeInterval};
use crate::taxonomy::{KeywordId, SemanticTaxonomy};

/// One `(PID, Γ)` item of a node's policy list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemanticEntry {
    pub pid: PolicyId,
    pub gamma: TimeInterval,
}

/// `⟨ϖ, Ξ, PPT⟩`. The policy list is kept in pid order.
#[derive(Debug, Clone)]
pub struct SemanticNode {
    pub keyword: KeywordId,
    pub parent: Option<KeywordId>,
    pub policies: Vec<SemanticEntry>,
    /// `policies[i].gamma` flattened for scanning.
    packed: Vec<PackedInterval>,
}

fn nanos_of_day(t: NaiveTime) -> u64 {
    t.num_seconds_from_midnight() as u64 * 1_000_000_000 + t.nanosecond() as u64
}

/// A [`TimeInterval`] as plain integers so a node scan compiles to
/// straight-line compares. An absent bound becomes the full range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PackedInterval {
    day_lo: i32,
    day_hi: i32,
    /// `ns_lo > ns_hi` wraps midnight.
    ns_lo: u64,
    ns_hi: u64,
}

impl PackedInterval {
    pub(crate) fn new(int: &TimeInterval) -> Self {
        let (day_lo, day_hi) = match (int.anytime, int.date_range) {
            (false, Some(r)) => (r.start.num_days_from_ce(), r.end.num_days_from_ce()),
            _ => (i32::MIN, i32::MAX),
        };
        let (ns_lo, ns_hi) = match (int.anytime, int.daily_window) {
            (false, Some(w)) => (nanos_of_day(w.start), nanos_of_day(w.end)),
            _ => (0, u64::MAX),
        };
        PackedInterval { day_lo, day_hi, ns_lo, ns_hi }
    }

    #[inline]
    pub(crate) fn contains(&self, day: i32, ns: u64) -> bool {
        let after_start = ns >= self.ns_lo;
        let before_end = ns <= self.ns_hi;
        let wraps = self.ns_lo > self.ns_hi;
        let in_window = (after_start & before_end) | (wraps & (after_start | before_end));
        (day >= self.day_lo) & (day <= self.day_hi) & in_window
    }
}

/// A timestamp split the way [`PackedInterval::contains`] wants it.
pub(crate) fn split_timestamp(t: NaiveDateTime) -> (i32, u64) {
    (t.date().num_days_from_ce(), nanos_of_day(t.time()))
}

#[derive(Debug, Clone)]
pub(crate) struct SemanticIndex {
    nodes: Vec<SemanticNode>,
    len: usize,
}

impl SemanticIndex {
    pub(crate) fn new(taxonomy: &SemanticTaxonomy) -> Self {
        let nodes = taxonomy
            .ids()
            .map(|k| SemanticNode { keyword: k, parent: taxonomy.parent(k), policies: Vec::new(), packed: Vec::new() })
            .collect();
        SemanticIndex { nodes, len: 0 }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn node(&self, k: KeywordId) -> &SemanticNode {
        &self.nodes[k.index()]
    }

    pub(crate) fn insert(&mut self, k: KeywordId, entry: SemanticEntry) {
        let node = &mut self.nodes[k.index()];
        // Policies usually arrive in pid order, so this is nearly always a push.
        let at = node.policies.partition_point(|e| e.pid < entry.pid);
        node.policies.insert(at, entry);
        node.packed.insert(at, PackedInterval::new(&entry.gamma));
        self.len += 1;
    }

    pub(crate) fn remove(&mut self, k: KeywordId, pid: PolicyId) -> bool {
        let node = &mut self.nodes[k.index()];
        match node.policies.binary_search_by(|e| e.pid.cmp(&pid)) {
            Ok(i) => {
                node.policies.remove(i);
                node.packed.remove(i);
                self.len -= 1;
                true
            }
            Err(_) => false,
        }
    }

    /// Walk from `start` to the root, collecting time-matching policies.
    /// Nodes already in `visited` end the walk early, since their
    /// ancestors were collected along with them. Each node contributes a
    /// run in pid order.
    pub(crate) fn collect_upward(&self, start: KeywordId, t: NaiveDateTime, visited: &mut Vec<KeywordId>, out: &mut Vec<PolicyId>) {
        let (day, ns) = split_timestamp(t);
        let mut cur = Some(start);
        while let Some(k) = cur {
            if visited.contains(&k) {
                return;
            }
            visited.push(k);
            let node = &self.nodes[k.index()];
            let base = out.len();
            out.resize(base + node.policies.len(), PolicyId(0));
            let mut n = base;
            for (e, packed) in node.policies.iter().zip(&node.packed) {
                out[n] = e.pid;
                n += usize::from(packed.contains(day, ns));
            }
            out.truncate(n);
            cur = node.parent;
        }
    }
}
