use lamp_bench::workload::synthetic_taxonomy;
use lamp_bench::*;
use lamp_core::dlp::{naive_scan, DlpTree, TreeConfig, DEFAULT_POINT_EPSILON};
use lamp_core::policy::{Location, LocationType};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> WorkloadSpec {
    WorkloadSpec { n_users: 200, n_locations: 50, policies_per_location: PoliciesPerLocation::Absolute(20), ..WorkloadSpec::default() }
}

#[test]
fn same_seed_gives_identical_policy_logs() {
    let a = Workload::generate(&small()).unwrap().policy_log();
    let b = Workload::generate(&small()).unwrap().policy_log();
    assert_eq!(a, b);
    let c = Workload::generate(&WorkloadSpec { seed: 43, ..small() }).unwrap().policy_log();
    assert_ne!(a, c);
}

#[test]
fn one_location_one_policy() {
    let spec =
        WorkloadSpec { n_users: 1, n_locations: 1, policies_per_location: PoliciesPerLocation::Absolute(1), ..WorkloadSpec::default() };
    assert_eq!(spec.total_policies(), 1);
    assert_eq!(Workload::generate(&spec).unwrap().policies.len(), 1);
}

#[test]
fn total_is_locations_times_policies_per_location() {
    let w = Workload::generate(&small()).unwrap();
    assert_eq!(w.policies.len(), 50 * 20);
    let pct = WorkloadSpec { policies_per_location: PoliciesPerLocation::PercentOfUsers(5.0), ..small() };
    assert_eq!(pct.total_policies(), 50 * 10);
    assert_eq!(Workload::generate(&pct).unwrap().policies.len(), 500);
}

#[test]
fn infeasible_specs_are_rejected() {
    let too_many = WorkloadSpec { policies_per_location: PoliciesPerLocation::Absolute(201), ..small() };
    assert!(matches!(Workload::generate(&too_many), Err(WorkloadError::InfeasibleSpec(_))));
    for spec in [
        WorkloadSpec { n_locations: 0, ..small() },
        WorkloadSpec { keywords_per_location: (0, 3), ..small() },
        WorkloadSpec { keywords_per_location: (2, 6), ..small() },
        WorkloadSpec { n_distinct_keywords: 5, ..small() },
        WorkloadSpec { exact_fraction: 1.5, ..small() },
        WorkloadSpec { semantic_granularity: [0.0, 0.0, 0.0], ..small() },
    ] {
        assert!(spec.validate().is_err(), "{spec:?}");
    }
}

#[test]
fn split_is_roughly_half_exact() {
    let w = Workload::generate(&WorkloadSpec { n_locations: 200, ..small() }).unwrap();
    let exact = w.policies.iter().filter(|p| p.typ == LocationType::E).count() as f64 / w.policies.len() as f64;
    assert!((exact - 0.5).abs() < 0.05, "exact share {exact}");
    for p in &w.policies {
        assert_eq!(p.typ == LocationType::E, matches!(p.loc, Location::Exact(_)));
    }
}

#[test]
fn owners_at_a_location_are_distinct() {
    let w = Workload::generate(&small()).unwrap();
    for chunk in w.policies.chunks(20) {
        let mut owners: Vec<_> = chunk.iter().map(|p| p.owner.clone()).collect();
        owners.sort();
        owners.dedup();
        assert_eq!(owners.len(), 20);
    }
}

#[test]
fn taxonomy_has_four_levels_and_the_requested_size() {
    for n in [18, 250, 1000, 5000] {
        let t = synthetic_taxonomy(n);
        assert_eq!(t.len(), n);
        assert_eq!(t.max_depth(), 3);
        assert_eq!(t.ids().filter(|&k| t.depth(k) == 1).count(), workload::GENERIC_CATEGORIES);
    }
}

#[test]
fn probes_come_from_generated_locations() {
    let w = Workload::generate(&small()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let p = w.probe(&mut rng, ProbeKind::Full);
        let a = p.address.as_ref().unwrap();
        assert!(w.locations.iter().any(|l| l.address.same_key(a)));
        assert!(!p.keywords.is_empty() && p.keywords.len() <= 5);
        assert!(p.keywords.iter().all(|k| w.taxonomy.id(k.as_str()).is_some()));
        assert!(w.probe(&mut rng, ProbeKind::ExactOnly).keywords.is_empty());
        assert!(w.probe(&mut rng, ProbeKind::SemanticOnly).address.is_none());
    }
}

#[test]
fn generated_workloads_index_and_agree_with_the_scan() {
    let w = Workload::generate(&small()).unwrap();
    let tree = DlpTree::build(w.taxonomy.clone(), TreeConfig::default(), &w.policies).unwrap();
    tree.verify().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut hits = 0;
    for _ in 0..200 {
        let p = w.probe(&mut rng, ProbeKind::Full);
        let mut got = tree.lookup(&p).unwrap();
        got.sort();
        hits += got.len();
        assert_eq!(got, naive_scan(&w.policies, &w.taxonomy, &p, DEFAULT_POINT_EPSILON));
    }
    assert!(hits > 0);
}

#[test]
fn group_photo_has_the_requested_faces() {
    let w = Workload::generate(&small()).unwrap();
    let records: Vec<_> = (0..30).map(|i| w.record(i)).collect();
    let faces = group_photo(&records, 18, 7);
    assert_eq!(faces.len(), 18);
    assert!(faces.iter().enumerate().all(|(i, f)| f.index as usize == i));
    assert_eq!(faces, group_photo(&records, 18, 7));
}
