//! Linear scan over every policy: the reference semantics for lookups.

use crate::policy::{point_matches, LampiPolicy, Location, PolicyId};
use crate::taxonomy::{KeywordId, SemanticTaxonomy};

use super::PhotoLocation;

/// Location predicate of a single policy against a photo location.
///
/// `photo_keywords` are the photo's keywords already resolved against the
/// taxonomy; unknown ones are simply absent.
pub fn location_matches(
    policy: &LampiPolicy,
    loc: &PhotoLocation,
    photo_keywords: &[KeywordId],
    taxonomy: &SemanticTaxonomy,
    point_epsilon: f64,
) -> bool {
    match &policy.loc {
        Location::Exact(addr) => match (&loc.address, &loc.point) {
            (Some(q), _) => addr.covers(q),
            (None, Some(p)) => addr.point().is_some_and(|sp| point_matches(&sp, p, point_epsilon)),
            (None, None) => false,
        },
        Location::Semantic(kw) => match taxonomy.id(kw.as_str()) {
            Some(k) => photo_keywords.iter().any(|&q| taxonomy.is_ancestor_or_self(k, q)),
            None => false,
        },
    }
}

/// Every policy whose location predicate and interval hold for `loc`.
/// Sorted, without duplicates.
pub fn naive_scan(policies: &[LampiPolicy], taxonomy: &SemanticTaxonomy, loc: &PhotoLocation, point_epsilon: f64) -> Vec<PolicyId> {
    let photo_keywords: Vec<KeywordId> = loc.keywords.iter().filter_map(|k| taxonomy.id(k.as_str())).collect();
    let mut out: Vec<PolicyId> = policies
        .iter()
        .filter(|p| location_matches(p, loc, &photo_keywords, taxonomy, point_epsilon) && p.int.contains(loc.timestamp))
        .map(|p| p.pid)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
