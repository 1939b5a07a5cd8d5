mod common;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use common::*;
use lamp_core::dlp::{naive_scan, DlpTree, PhotoLocation, TreeConfig, DEFAULT_POINT_EPSILON};
use lamp_core::policy::{ExactAddress, GeoPoint, LampiPolicy, Location, PolicyId, Sensitiveness, TimeInterval};
use lamp_core::taxonomy::SemanticTaxonomy;
use proptest::prelude::*;
use rand::Rng;

/// Lookup output as a sorted set, failing on duplicates.
fn set(mut v: Vec<PolicyId>) -> Vec<PolicyId> {
    let n = v.len();
    v.sort();
    v.dedup();
    assert_eq!(v.len(), n, "lookup returned a pid twice");
    v
}

fn config(fanout: usize) -> TreeConfig {
    TreeConfig { fanout, ..TreeConfig::default() }
}

fn height_bound(fanout: usize, n_exact: usize) -> usize {
    // 2 + ceil(log_B n), computed with integers.
    let mut levels = 0;
    let mut reach = 1usize;
    while reach < n_exact {
        reach = reach.saturating_mul(fanout);
        levels += 1;
    }
    2 + levels
}

#[test]
fn first_insert_makes_a_single_leaf() {
    let mut tree = DlpTree::new(Arc::new(SemanticTaxonomy::builtin()), TreeConfig::default());
    assert_eq!(tree.height(), 1);
    let p = LampiPolicy::exact(1, "a", ExactAddress::new("1 main st", "alpha", "north", "usa"), TimeInterval::ANYTIME, Sensitiveness::Low);
    tree.insert(&p).unwrap();
    assert_eq!(tree.height(), 1);
    assert_eq!(tree.exact_entries().len(), 1);
    assert_eq!(tree.verify().unwrap().exact.leaves, 1);
}

#[test]
fn empty_tree_finds_nothing() {
    let tree = DlpTree::new(Arc::new(SemanticTaxonomy::builtin()), TreeConfig::default());
    let t = at(2020, 1, 1, 0, 0);
    let addr = ExactAddress::new("1 main st", "alpha", "north", "usa");
    assert!(tree.lookup_exact(Some(&addr), None, t).is_empty());
    assert!(tree.lookup_exact(None, GeoPoint::new(1.0, 1.0).as_ref(), t).is_empty());
    assert!(tree.lookup_semantic("any place", t).unwrap().is_empty());
}

#[test]
fn overfull_city_leaf_splits_and_keeps_everything() {
    let b = 100;
    let policies: Vec<LampiPolicy> = (0..=b as u64)
        .map(|i| {
            let addr = ExactAddress::new(&format!("{i} rue de rivoli"), "paris", "ile-de-france", "france");
            LampiPolicy::exact(i, "owner", addr, TimeInterval::ANYTIME, Sensitiveness::Low)
        })
        .collect();
    let tree = DlpTree::build(Arc::new(SemanticTaxonomy::builtin()), config(b), &policies).unwrap();
    let shape = tree.verify().unwrap();
    assert_eq!(shape.exact.height, 2);
    assert!(shape.exact.leaves >= 2);
    let stored: BTreeSet<u64> = tree.exact_entries().iter().map(|e| e.pid.0).collect();
    let expected: BTreeSet<u64> = policies.iter().map(|p| p.pid.0).collect();
    assert_eq!(stored, expected);
    let t = at(2020, 1, 1, 0, 0);
    for p in &policies {
        let Location::Exact(a) = &p.loc else { unreachable!() };
        assert_eq!(tree.lookup_exact(Some(a), None, t), vec![p.pid]);
    }
}

#[test]
fn ten_thousand_policies_agree_with_scan_on_five_hundred_probes() {
    let mut r = rng(7);
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let policies = random_policies(&mut r, 10_000, &taxonomy, 1);
    let tree = DlpTree::build(taxonomy.clone(), TreeConfig::default(), &policies).unwrap();
    tree.verify().unwrap();
    let mut nonempty = 0;
    for _ in 0..500 {
        let probe = random_probe(&mut r, &taxonomy);
        let got = set(tree.lookup(&probe).unwrap());
        let want = naive_scan(&policies, &taxonomy, &probe, DEFAULT_POINT_EPSILON);
        assert_eq!(got, want, "probe {probe:?}");
        nonempty += usize::from(!got.is_empty());
    }
    assert!(nonempty > 250, "probes should mostly hit something, got {nonempty}");
}

#[test]
fn removing_one_of_a_thousand_keeps_tree_and_scan_in_step() {
    let mut r = rng(11);
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let mut policies = random_policies(&mut r, 1000, &taxonomy, 1);
    let mut tree = DlpTree::build(taxonomy.clone(), TreeConfig { fanout: 8, ..TreeConfig::default() }, &policies).unwrap();
    let victim = policies.remove(r.random_range(0..policies.len()));
    tree.remove(victim.pid).unwrap();
    tree.verify().unwrap();
    assert_eq!(tree.policy_count(), 999);
    for _ in 0..300 {
        let probe = random_probe(&mut r, &taxonomy);
        let got = set(tree.lookup(&probe).unwrap());
        assert!(!got.contains(&victim.pid));
        assert_eq!(got, naive_scan(&policies, &taxonomy, &probe, DEFAULT_POINT_EPSILON));
    }
}

#[test]
fn diderot_removal_releases_alice() {
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let diderot = ExactAddress::new("5 rue thomas mann", "paris", "ile-de-france", "france");
    let alice = LampiPolicy::exact(2, "alice", diderot.clone(), TimeInterval::ANYTIME, Sensitiveness::High);
    let mut tree = DlpTree::build(taxonomy, TreeConfig::default(), [&alice]).unwrap();
    let photo = PhotoLocation::at(at(2019, 12, 1, 12, 0)).with_address(diderot);
    assert_eq!(set(tree.lookup(&photo).unwrap()), vec![PolicyId(2)]);
    tree.remove(PolicyId(2)).unwrap();
    assert!(tree.lookup(&photo).unwrap().is_empty());
}

/// Parent map rebuilt from the taxonomy's rows, walked without the library.
fn chain(rows: &HashMap<String, String>, kw: &str) -> Vec<String> {
    let mut out = vec![kw.to_owned()];
    let mut cur = kw;
    while let Some(p) = rows.get(cur) {
        if p == "ROOT" {
            break;
        }
        out.push(p.clone());
        cur = p;
    }
    out
}

#[test]
fn random_250_keyword_taxonomy_matches_parent_walk() {
    let mut r = rng(250);
    let taxonomy = Arc::new(random_taxonomy(&mut r, 250));
    let rows: HashMap<String, String> = taxonomy
        .to_rows()
        .into_iter()
        .map(|row| match row {
            lamp_core::taxonomy::TaxonomyRow::Pair(k, p) => (k, p),
            lamp_core::taxonomy::TaxonomyRow::Named { keyword, parent } => (keyword, parent),
        })
        .collect();
    let policies: Vec<LampiPolicy> =
        random_policies(&mut r, 2000, &taxonomy, 1).into_iter().filter(|p| matches!(p.loc, Location::Semantic(_))).collect();
    let tree = DlpTree::build(taxonomy.clone(), TreeConfig::default(), &policies).unwrap();
    let keywords: Vec<&String> = rows.keys().collect();
    for _ in 0..500 {
        let kw = keywords[r.random_range(0..keywords.len())];
        let t = random_timestamp(&mut r);
        let ancestors = chain(&rows, kw);
        let mut want: Vec<PolicyId> = policies
            .iter()
            .filter(|p| match &p.loc {
                Location::Semantic(k) => ancestors.iter().any(|a| a == k.as_str()),
                _ => false,
            })
            .filter(|p| p.int.contains(t))
            .map(|p| p.pid)
            .collect();
        want.sort();
        assert_eq!(set(tree.lookup_semantic(kw, t).unwrap()), want, "keyword {kw}");
    }
}

#[test]
fn ancestors_reach_down_but_siblings_do_not() {
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let ent = LampiPolicy::semantic(1, "kate", "entertainment", TimeInterval::ANYTIME, Sensitiveness::Low);
    let bar = LampiPolicy::semantic(2, "kate", "bar", TimeInterval::ANYTIME, Sensitiveness::Low);
    let root = LampiPolicy::semantic(3, "kate", "any place", TimeInterval::ANYTIME, Sensitiveness::Low);
    let tree = DlpTree::build(taxonomy, TreeConfig::default(), [&ent, &bar, &root]).unwrap();
    let t = at(2020, 1, 1, 0, 0);
    assert_eq!(set(tree.lookup_semantic("bar", t).unwrap()), vec![PolicyId(1), PolicyId(2), PolicyId(3)]);
    assert_eq!(set(tree.lookup_semantic("shopping mall", t).unwrap()), vec![PolicyId(1), PolicyId(3)]);
    assert_eq!(set(tree.lookup_semantic("hospital", t).unwrap()), vec![PolicyId(3)]);
    assert_eq!(tree.semantic_node("bar").unwrap().policies.len(), 1);
}

#[test]
fn point_only_probe_outside_every_region_is_empty() {
    let mut r = rng(3);
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let policies = random_policies(&mut r, 500, &taxonomy, 1);
    let tree = DlpTree::build(taxonomy, TreeConfig::default(), &policies).unwrap();
    let far = PhotoLocation::at(at(2019, 6, 1, 12, 0)).with_point(GeoPoint::new(-80.0, -170.0).unwrap());
    assert!(tree.lookup(&far).unwrap().is_empty());
}

#[test]
fn insert_then_remove_restores_lookups() {
    let mut r = rng(5);
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let policies = random_policies(&mut r, 300, &taxonomy, 1);
    let extra = random_policies(&mut r, 40, &taxonomy, 10_000);
    let base = DlpTree::build(taxonomy.clone(), config(4), &policies).unwrap();
    let mut tree = DlpTree::build(taxonomy.clone(), config(4), &policies).unwrap();
    for p in &extra {
        tree.insert(p).unwrap();
    }
    for p in &extra {
        tree.remove(p.pid).unwrap();
    }
    tree.verify().unwrap();
    for _ in 0..200 {
        let probe = random_probe(&mut r, &taxonomy);
        assert_eq!(set(tree.lookup(&probe).unwrap()), set(base.lookup(&probe).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_equals_scan(seed in any::<u64>(), n in 0usize..400, fanout in 3usize..12) {
        let mut r = rng(seed);
        let taxonomy = Arc::new(random_taxonomy(&mut r, 30));
        let policies = random_policies(&mut r, n, &taxonomy, 1);
        let tree = DlpTree::build(taxonomy.clone(), config(fanout), &policies).unwrap();
        for _ in 0..40 {
            let probe = random_probe(&mut r, &taxonomy);
            prop_assert_eq!(set(tree.lookup(&probe).unwrap()), naive_scan(&policies, &taxonomy, &probe, DEFAULT_POINT_EPSILON));
        }
    }

    #[test]
    fn fanout_height_and_enclosure_hold(seed in any::<u64>(), n in 1usize..3000, fanout in 16usize..40) {
        let mut r = rng(seed);
        let taxonomy = Arc::new(SemanticTaxonomy::builtin());
        let policies = random_policies(&mut r, n, &taxonomy, 1);
        let tree = DlpTree::build(taxonomy, config(fanout), &policies).unwrap();
        let shape = tree.verify().map_err(TestCaseError::fail)?;
        prop_assert!(shape.exact.max_node_entries <= fanout);
        let n_exact = shape.exact.entries;
        prop_assert!(shape.exact.height <= height_bound(fanout, n_exact), "height {} for {} entries at B={}", shape.exact.height, n_exact, fanout);
    }

    #[test]
    fn sequential_keys_still_respect_height(n in 1usize..5000, fanout in 3usize..24, descending in any::<bool>()) {
        let mut policies: Vec<LampiPolicy> = (0..n as u64)
            .map(|i| LampiPolicy::exact(i, "o", ExactAddress::new(&format!("{i:06} st"), "c", "s", "n"), TimeInterval::ANYTIME, Sensitiveness::Low))
            .collect();
        if descending {
            policies.reverse();
        }
        let tree = DlpTree::build(Arc::new(SemanticTaxonomy::builtin()), config(fanout), &policies).unwrap();
        let shape = tree.verify().map_err(TestCaseError::fail)?;
        prop_assert!(shape.exact.height <= height_bound(fanout, n));
    }

    #[test]
    fn removed_pids_never_come_back(seed in any::<u64>(), n in 10usize..300, drop_every in 2usize..5) {
        let mut r = rng(seed);
        let taxonomy = Arc::new(SemanticTaxonomy::builtin());
        let policies = random_policies(&mut r, n, &taxonomy, 1);
        let mut tree = DlpTree::build(taxonomy.clone(), config(4), &policies).unwrap();
        let (gone, kept): (Vec<_>, Vec<_>) = policies.iter().enumerate().partition(|(i, _)| i % drop_every == 0);
        for (_, p) in &gone {
            tree.remove(p.pid).unwrap();
        }
        tree.verify().map_err(TestCaseError::fail)?;
        let kept: Vec<LampiPolicy> = kept.into_iter().map(|(_, p)| p.clone()).collect();
        let gone: BTreeSet<PolicyId> = gone.iter().map(|(_, p)| p.pid).collect();
        for _ in 0..40 {
            let probe = random_probe(&mut r, &taxonomy);
            let got = set(tree.lookup(&probe).unwrap());
            prop_assert!(got.iter().all(|pid| !gone.contains(pid)));
            prop_assert_eq!(got, naive_scan(&kept, &taxonomy, &probe, DEFAULT_POINT_EPSILON));
        }
    }
}
