//! Exact-location side of the DLP tree.
//!
//! A B+-tree keyed by `(address, pid)` where addresses order by nation,
//! state, city and street. Key order keeps every administrative prefix
//! contiguous, so internal regions partition by nation, then state, then
//! city, and the policies of nearby addresses share leaves. Each internal
//! entry carries the key span of its subtree plus the bounding box of any
//! coordinates stored below it, which supports point-only probes.

use std::cmp::Ordering;

use chrono::NaiveDateTime;

use super::MIN_FANOUT;
use crate::policy::{point_matches, BBox, ExactAddress, GeoPoint, PolicyId, TimeInterval};

/// `⟨street, city, state, nation, Γ, PID⟩`
#[derive(Debug, Clone)]
pub struct ExactLeafEntry {
    pub address: ExactAddress,
    pub gamma: TimeInterval,
    pub pid: PolicyId,
}

impl ExactLeafEntry {
    fn cmp_to(&self, address: &ExactAddress, pid: PolicyId) -> Ordering {
        self.address.cmp_key(address).then(self.pid.cmp(&pid))
    }
}

/// Region covered by a subtree: its key span and the box around its points.
#[derive(Debug, Clone)]
pub struct NodeRegion {
    pub low: (ExactAddress, PolicyId),
    pub high: (ExactAddress, PolicyId),
    pub bounds: Option<BBox>,
}

impl NodeRegion {
    fn of_entry(e: &ExactLeafEntry) -> Self {
        NodeRegion { low: (e.address.clone(), e.pid), high: (e.address.clone(), e.pid), bounds: e.address.point().map(BBox::from_point) }
    }

    fn cmp_low(&self, address: &ExactAddress, pid: PolicyId) -> Ordering {
        self.low.0.cmp_key(address).then(self.low.1.cmp(&pid))
    }

    fn cmp_high(&self, address: &ExactAddress, pid: PolicyId) -> Ordering {
        self.high.0.cmp_key(address).then(self.high.1.cmp(&pid))
    }

    /// Whether any key with this address can lie in the span.
    pub fn encloses_address(&self, address: &ExactAddress) -> bool {
        self.low.0.cmp_key(address) != Ordering::Greater && self.high.0.cmp_key(address) != Ordering::Less
    }

    pub fn encloses_key(&self, address: &ExactAddress, pid: PolicyId) -> bool {
        self.cmp_low(address, pid) != Ordering::Greater && self.cmp_high(address, pid) != Ordering::Less
    }

    pub fn near_point(&self, p: &GeoPoint, epsilon: f64) -> bool {
        self.bounds.is_some_and(|b| b.expanded(epsilon).contains_point(p))
    }

    fn absorb(&mut self, other: &NodeRegion) {
        if self.cmp_low(&other.low.0, other.low.1) == Ordering::Greater {
            self.low = other.low.clone();
        }
        if self.cmp_high(&other.high.0, other.high.1) == Ordering::Less {
            self.high = other.high.clone();
        }
        self.bounds = BBox::merge(self.bounds, other.bounds);
    }
}

/// `⟨region, CPT⟩`
#[derive(Debug)]
pub struct InternalEntry {
    pub region: NodeRegion,
    child: Box<Node>,
}

#[derive(Debug)]
enum Node {
    Leaf(Vec<ExactLeafEntry>),
    Internal(Vec<InternalEntry>),
}

impl Node {
    fn len(&self) -> usize {
        match self {
            Node::Leaf(v) => v.len(),
            Node::Internal(v) => v.len(),
        }
    }

    fn region(&self) -> Option<NodeRegion> {
        match self {
            Node::Leaf(entries) => {
                let first = entries.first()?;
                let last = entries.last()?;
                let bounds = entries.iter().filter_map(|e| e.address.point()).map(BBox::from_point).reduce(|a, b| a.union(&b));
                Some(NodeRegion { low: (first.address.clone(), first.pid), high: (last.address.clone(), last.pid), bounds })
            }
            Node::Internal(children) => {
                let first = children.first()?;
                let last = children.last()?;
                let bounds = children.iter().fold(None, |acc, c| BBox::merge(acc, c.region.bounds));
                Some(NodeRegion { low: first.region.low.clone(), high: last.region.high.clone(), bounds })
            }
        }
    }
}

/// Whether a node lies on the tree's leftmost or rightmost path.
#[derive(Debug, Clone, Copy)]
struct Edge {
    left: bool,
    right: bool,
}

impl Edge {
    const ROOT: Edge = Edge { left: true, right: true };

    fn child(self, i: usize, n_children: usize) -> Edge {
        Edge { left: self.left && i == 0, right: self.right && i + 1 == n_children }
    }
}

/// Where to cut an overfull node of `len` entries after a change at
/// positions `lo..=hi` (one leaf slot, or a split child and its new sibling).
///
/// A change at either end of the whole tree leaves the old node full, which
/// keeps sequential loads densely packed. Only the two outer paths ever hold
/// such thin nodes, so every other node stays at least half full.
fn split_point(len: usize, lo: usize, hi: usize, edge: Edge) -> usize {
    if edge.right && hi + 1 == len {
        len - 1
    } else if edge.left && lo == 0 {
        1
    } else {
        len / 2
    }
}

fn into_entry(node: Node) -> InternalEntry {
    let region = node.region().expect("split halves are non-empty");
    InternalEntry { region, child: Box::new(node) }
}

fn insert_rec(node: &mut Node, entry: ExactLeafEntry, fanout: usize, edge: Edge) -> Option<InternalEntry> {
    match node {
        Node::Leaf(entries) => {
            let pos = entries.partition_point(|e| e.cmp_to(&entry.address, entry.pid) == Ordering::Less);
            entries.insert(pos, entry);
            if entries.len() <= fanout {
                return None;
            }
            let right = entries.split_off(split_point(entries.len(), pos, pos, edge));
            Some(into_entry(Node::Leaf(right)))
        }
        Node::Internal(children) => {
            let i = children.partition_point(|c| c.cmp_high(&entry.address, entry.pid) == Ordering::Less).min(children.len() - 1);
            let probe = NodeRegion::of_entry(&entry);
            let child_edge = edge.child(i, children.len());
            let split = insert_rec(&mut children[i].child, entry, fanout, child_edge);
            match split {
                None => {
                    children[i].region.absorb(&probe);
                    None
                }
                Some(right) => {
                    children[i].region = children[i].child.region().expect("left half is non-empty");
                    children.insert(i + 1, right);
                    if children.len() <= fanout {
                        return None;
                    }
                    let right = children.split_off(split_point(children.len(), i, i + 1, edge));
                    Some(into_entry(Node::Internal(right)))
                }
            }
        }
    }
}

impl InternalEntry {
    fn cmp_high(&self, address: &ExactAddress, pid: PolicyId) -> Ordering {
        self.region.cmp_high(address, pid)
    }
}

/// Removes the entry; returns whether it was present. Underfull nodes are
/// left in place, and empty children are unlinked.
fn remove_rec(node: &mut Node, address: &ExactAddress, pid: PolicyId) -> bool {
    match node {
        Node::Leaf(entries) => match entries.binary_search_by(|e| e.cmp_to(address, pid)) {
            Ok(pos) => {
                entries.remove(pos);
                true
            }
            Err(_) => false,
        },
        Node::Internal(children) => {
            let Some(i) = children.iter().position(|c| c.region.encloses_key(address, pid)) else {
                return false;
            };
            let removed = remove_rec(&mut children[i].child, address, pid);
            if removed && children[i].child.len() == 0 {
                children.remove(i);
            }
            removed
        }
    }
}

fn collect_address(node: &Node, address: &ExactAddress, t: NaiveDateTime, out: &mut Vec<PolicyId>) {
    match node {
        Node::Leaf(entries) => {
            let start = entries.partition_point(|e| e.address.cmp_key(address) == Ordering::Less);
            for e in entries[start..].iter().take_while(|e| e.address.same_key(address)) {
                if e.gamma.contains(t) {
                    out.push(e.pid);
                }
            }
        }
        Node::Internal(children) => {
            let start = children.partition_point(|c| c.region.high.0.cmp_key(address) == Ordering::Less);
            for c in children[start..].iter().take_while(|c| c.region.low.0.cmp_key(address) != Ordering::Greater) {
                collect_address(&c.child, address, t, out);
            }
        }
    }
}

fn collect_point(node: &Node, p: &GeoPoint, epsilon: f64, t: NaiveDateTime, out: &mut Vec<PolicyId>) {
    match node {
        Node::Leaf(entries) => {
            for e in entries {
                if e.address.point().is_some_and(|sp| point_matches(&sp, p, epsilon)) && e.gamma.contains(t) {
                    out.push(e.pid);
                }
            }
        }
        Node::Internal(children) => {
            for c in children.iter().filter(|c| c.region.near_point(p, epsilon)) {
                collect_point(&c.child, p, epsilon, t, out);
            }
        }
    }
}

/// Shape summary produced by [`ExactIndex::verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactShape {
    pub height: usize,
    pub entries: usize,
    pub leaves: usize,
    pub max_node_entries: usize,
}

#[derive(Debug)]
pub(crate) struct ExactIndex {
    root: Node,
    fanout: usize,
    len: usize,
}

impl ExactIndex {
    pub(crate) fn new(fanout: usize) -> Self {
        assert!(fanout >= MIN_FANOUT, "fanout must be at least {MIN_FANOUT}");
        ExactIndex { root: Node::Leaf(Vec::new()), fanout, len: 0 }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn insert(&mut self, entry: ExactLeafEntry) {
        self.len += 1;
        if let Some(right) = insert_rec(&mut self.root, entry, self.fanout, Edge::ROOT) {
            let old = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
            self.root = Node::Internal(vec![into_entry(old), right]);
        }
    }

    pub(crate) fn remove(&mut self, address: &ExactAddress, pid: PolicyId) -> bool {
        let removed = remove_rec(&mut self.root, address, pid);
        if removed {
            self.len -= 1;
            if self.root.len() == 0 {
                self.root = Node::Leaf(Vec::new());
            }
        }
        removed
    }

    /// Policies stored under exactly this address key whose interval holds at `t`.
    pub(crate) fn collect_address(&self, address: &ExactAddress, t: NaiveDateTime, out: &mut Vec<PolicyId>) {
        collect_address(&self.root, address, t, out);
    }

    pub(crate) fn collect_point(&self, p: &GeoPoint, epsilon: f64, t: NaiveDateTime, out: &mut Vec<PolicyId>) {
        collect_point(&self.root, p, epsilon, t, out);
    }

    pub(crate) fn height(&self) -> usize {
        let mut h = 1;
        let mut node = &self.root;
        while let Node::Internal(children) = node {
            h += 1;
            node = &children[0].child;
        }
        h
    }

    pub(crate) fn entries(&self) -> Vec<&ExactLeafEntry> {
        fn walk<'a>(node: &'a Node, out: &mut Vec<&'a ExactLeafEntry>) {
            match node {
                Node::Leaf(entries) => out.extend(entries.iter()),
                Node::Internal(children) => children.iter().for_each(|c| walk(&c.child, out)),
            }
        }
        let mut out = Vec::with_capacity(self.len);
        walk(&self.root, &mut out);
        out
    }

    /// Full structural check: fanout, balance, key order, and region enclosure.
    pub(crate) fn verify(&self) -> Result<ExactShape, String> {
        struct Acc {
            leaf_depth: Option<usize>,
            entries: usize,
            leaves: usize,
            max_node: usize,
        }

        fn walk(
            node: &Node,
            depth: usize,
            fanout: usize,
            acc: &mut Acc,
        ) -> Result<Vec<(ExactAddress, PolicyId, Option<GeoPoint>)>, String> {
            if node.len() > fanout {
                return Err(format!("node at depth {depth} holds {} entries, fanout is {fanout}", node.len()));
            }
            acc.max_node = acc.max_node.max(node.len());
            match node {
                Node::Leaf(entries) => {
                    match acc.leaf_depth {
                        None => acc.leaf_depth = Some(depth),
                        Some(d) if d != depth => return Err(format!("leaves at depths {d} and {depth}")),
                        _ => {}
                    }
                    if entries.windows(2).any(|w| w[0].cmp_to(&w[1].address, w[1].pid) != Ordering::Less) {
                        return Err("leaf entries out of order".into());
                    }
                    acc.entries += entries.len();
                    acc.leaves += 1;
                    Ok(entries.iter().map(|e| (e.address.clone(), e.pid, e.address.point())).collect())
                }
                Node::Internal(children) => {
                    if children.is_empty() {
                        return Err(format!("empty internal node at depth {depth}"));
                    }
                    let mut all = Vec::new();
                    let mut prev_high: Option<&(ExactAddress, PolicyId)> = None;
                    for c in children {
                        if let Some((a, p)) = prev_high {
                            if c.region.cmp_low(a, *p) != Ordering::Greater {
                                return Err("sibling regions overlap or are out of order".into());
                            }
                        }
                        prev_high = Some(&c.region.high);
                        let below = walk(&c.child, depth + 1, fanout, acc)?;
                        for (a, p, pt) in &below {
                            if !c.region.encloses_key(a, *p) {
                                return Err(format!("region does not enclose key {a:?}/{p}"));
                            }
                            if let Some(pt) = pt {
                                if !c.region.bounds.is_some_and(|b| b.contains_point(pt)) {
                                    return Err(format!("region bounds miss point of {a:?}"));
                                }
                            }
                        }
                        all.extend(below);
                    }
                    Ok(all)
                }
            }
        }

        let mut acc = Acc { leaf_depth: None, entries: 0, leaves: 0, max_node: 0 };
        walk(&self.root, 1, self.fanout, &mut acc)?;
        if acc.entries != self.len {
            return Err(format!("counted {} entries, index says {}", acc.entries, self.len));
        }
        Ok(ExactShape { height: self.height(), entries: acc.entries, leaves: acc.leaves, max_node_entries: acc.max_node })
    }
}
