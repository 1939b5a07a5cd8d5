//! One function per acceptance criterion. Each runs its checks in full and
//! reports what it measured; thresholds are the constants below.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use lamp::engine::POLICY_LOG;
use lamp::{Engine, EngineConfig};
use lamp_bench::scenario::{run_faces_point, run_lookup_point, GROUP_PHOTO_FACES};
use lamp_bench::workload::user_id;
use lamp_bench::{group_photo, plan, run_scenario, spec_at, BenchOptions, BenchResult, Preset, Scenario};
use lamp_core::dlp::{naive_scan, DlpTree, PhotoLocation, TreeConfig, DEFAULT_POINT_EPSILON};
use lamp_core::enforce::{check_photo, PhotoManifest, RedactionAction};
use lamp_core::face::{distance, Candidate, FaceRecord, FaceVector, Matcher, PhotoFace, SeededEmbedder, ToleranceConfig};
use lamp_core::policy::{LampiPolicy, Location, PolicyId, Sensitiveness, TimeInterval, UserId};
use lamp_core::taxonomy::SemanticTaxonomy;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::gen;
use crate::oracle::{brute_force_check, straight_distance, threshold_margin};

pub const AC1_LOOKUP_INSTANCES: usize = 10_000;
pub const AC1_CHECK_INSTANCES: usize = 10_000;
pub const AC1_BUDGET: Duration = Duration::from_secs(5 * 60);
/// Engine and oracle distances may differ by summation order only.
pub const DISTANCE_AGREEMENT: f64 = 1e-12;
/// Generated faces must sit at least this far from either tolerance.
pub const MIN_THRESHOLD_MARGIN: f64 = 1e-6;

pub const AC2_MIN_SPEEDUP: f64 = 100.0;
pub const AC2_POLICIES: usize = 1_000_000;
pub const AC2_LOCATIONS: usize = 10_000;
pub const AC2_BUDGET: Duration = Duration::from_secs(10 * 60);

pub const AC3_MAX_DLP_GROWTH: f64 = 3.0;
pub const AC3_MIN_NAIVE_GROWTH: f64 = 5.0;

pub const AC4_MAX_DLP_SPREAD: f64 = 3.0;

pub const AC5_MAX_NAIVE_SPREAD: f64 = 1.5;
pub const AC5_MIN_NAIVE_OVER_DLP: f64 = 50.0;
pub const AC5_MAX_POLICIES: usize = 10_000_000;

pub const AC6_CANDIDATES: usize = 5000;
pub const AC6_PARALLEL_BUDGET_MS: f64 = 1000.0;
pub const AC6_MIN_GROWTH_RATIO: f64 = 3.0;

pub const AC7_EPSILON: f64 = 1e-6;

pub const AC8_BUDGET: Duration = Duration::from_secs(2 * 60);

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {} {}: {} ({:.1} s)", self.id, self.title, self.detail, self.elapsed.as_secs_f64())
    }
}

type Criterion = fn() -> (bool, String);

pub const ALL: [(&str, &str, Criterion); 8] = [
    ("AC1", "oracle equivalence", ac1_oracle_equivalence),
    ("AC2", "speedup at 1M policies", ac2_speedup),
    ("AC3", "near-constant lookup over locations", ac3_locations),
    ("AC4", "semantic keyword sweep", ac4_keywords),
    ("AC5", "policies per location", ac5_polloc),
    ("AC6", "parallel matching", ac6_parallel_matching),
    ("AC7", "sensitiveness semantics", ac7_sensitiveness),
    ("AC8", "structural invariants", ac8_invariants),
];

pub fn run(id: &'static str, title: &'static str, criterion: Criterion) -> Outcome {
    let started = Instant::now();
    let (pass, detail) = criterion();
    Outcome { id, title, pass, detail, elapsed: started.elapsed() }
}

fn sorted(mut v: Vec<PolicyId>) -> Vec<PolicyId> {
    v.sort_unstable();
    v
}

fn is_set(v: &[PolicyId]) -> bool {
    v.iter().collect::<BTreeSet<_>>().len() == v.len()
}

fn ratio(a: f64, b: f64) -> f64 {
    a / b
}

// ---- AC1 ----

/// Lookup against the naive scan, on fresh trees and on trees after removals.
pub fn lookup_instances(n_instances: usize) -> Result<usize, String> {
    let fanouts = [3, 4, 8, 16, 100];
    let per_world = 10;
    let mut done = 0;
    let mut world = 0u64;
    while done < n_instances {
        let mut r = gen::rng(0xac1_0000 + world);
        let size = r.random_range(1..40);
        let taxonomy = Arc::new(gen::taxonomy(&mut r, size));
        let n = r.random_range(0..300);
        let owners = r.random_range(1..30);
        let mut policies = gen::policies(&mut r, n, owners, &taxonomy);
        let config = TreeConfig { fanout: *fanouts.choose(&mut r).unwrap(), ..TreeConfig::default() };
        let mut tree = DlpTree::build(taxonomy.clone(), config, &policies).map_err(|e| e.to_string())?;
        if world % 2 == 1 && !policies.is_empty() {
            let step = r.random_range(2..5);
            let (gone, kept): (Vec<_>, Vec<_>) = policies.into_iter().enumerate().partition(|(i, _)| i % step == 0);
            for (_, p) in &gone {
                tree.remove(p.pid).map_err(|e| e.to_string())?;
            }
            policies = kept.into_iter().map(|(_, p)| p).collect();
        }
        for _ in 0..per_world.min(n_instances - done) {
            let probe = gen::probe(&mut r, &taxonomy);
            let got = tree.lookup(&probe).map_err(|e| e.to_string())?;
            let want = naive_scan(&policies, &taxonomy, &probe, config.point_epsilon);
            if !is_set(&got) || sorted(got.clone()) != want {
                return Err(format!("world {world}: lookup {got:?} but naive scan {want:?} for {probe:?}"));
            }
            done += 1;
        }
        world += 1;
    }
    Ok(done)
}

/// check_photo against the brute-force composition. Returns the instance
/// count and how many decisions were compared.
pub fn check_instances(n_instances: usize) -> Result<(usize, usize), String> {
    let tolerances = ToleranceConfig::default();
    let sequential = Matcher::sequential(tolerances);
    let parallel = Matcher::new(tolerances, 2).map_err(|e| e.to_string())?;
    let per_world = 10;
    let mut done = 0;
    let mut decisions = 0;
    let mut world = 0u64;
    while done < n_instances {
        let mut r = gen::rng(0xac1_8000_0000 + world);
        let size = r.random_range(1..30);
        let taxonomy = Arc::new(gen::taxonomy(&mut r, size));
        let owners = r.random_range(1..10);
        let n = r.random_range(0..80);
        let policies = gen::policies(&mut r, n, owners, &taxonomy);
        let faces: HashMap<UserId, FaceVector> =
            (0..owners).filter(|_| r.random_bool(0.8)).map(|i| (UserId::new(gen::owner(i)), gen::identity(&gen::owner(i)))).collect();
        let tree = DlpTree::build(taxonomy.clone(), TreeConfig::default(), &policies).map_err(|e| e.to_string())?;
        let store: HashMap<PolicyId, LampiPolicy> = policies.iter().map(|p| (p.pid, p.clone())).collect();
        for k in 0..per_world.min(n_instances - done) {
            let location = gen::probe(&mut r, &taxonomy);
            let m = gen::manifest(&mut r, k, owners, location);
            let matcher = if r.random_bool(0.5) { &sequential } else { &parallel };
            let got = check_photo(&m, &tree, &faces, &store, matcher).map_err(|e| e.to_string())?;
            let (applicable, want) = brute_force_check(&m, &policies, &taxonomy, &faces, &tolerances, DEFAULT_POINT_EPSILON);
            let margin = threshold_margin(&m, &applicable, &policies, &faces, &tolerances);
            if margin < MIN_THRESHOLD_MARGIN {
                return Err(format!("world {world} photo {k}: a face sits {margin:e} from a tolerance"));
            }
            if got.retrieved != applicable {
                return Err(format!("world {world} photo {k}: retrieved {:?}, oracle {:?}", got.retrieved, applicable));
            }
            let same = got.decisions.len() == want.len()
                && got.decisions.iter().zip(&want).all(|(g, w)| {
                    g.face_index == w.face_index
                        && g.protected_user == w.user
                        && g.triggering_policy == w.pid
                        && g.action == RedactionAction::ReplaceFace
                        && (g.distance - w.distance).abs() <= DISTANCE_AGREEMENT
                });
            if !same {
                return Err(format!("world {world} photo {k}: engine {:?}, oracle {want:?}", got.decisions));
            }
            decisions += want.len();
            done += 1;
        }
        world += 1;
    }
    Ok((done, decisions))
}

pub fn ac1_oracle_equivalence() -> (bool, String) {
    let started = Instant::now();
    let lookups = lookup_instances(AC1_LOOKUP_INSTANCES);
    let checks = check_instances(AC1_CHECK_INSTANCES);
    let elapsed = started.elapsed();
    match (lookups, checks) {
        (Ok(l), Ok((c, d))) => (
            l >= AC1_LOOKUP_INSTANCES && c >= AC1_CHECK_INSTANCES && elapsed < AC1_BUDGET,
            format!(
                "{l} lookup and {c} check_photo instances agree ({d} decisions); {:.1} s, limit {} s",
                elapsed.as_secs_f64(),
                AC1_BUDGET.as_secs()
            ),
        ),
        (Err(e), _) | (_, Err(e)) => (false, e),
    }
}

// ---- AC2 to AC5 ----

fn sweep(scenario: Scenario) -> Result<Vec<BenchResult>, String> {
    run_scenario(scenario, Preset::Desk, &BenchOptions::default()).map_err(|e| e.to_string())
}

fn p50s(results: &[BenchResult]) -> String {
    results.iter().map(|r| format!("x={} lamp {:.4} naive {:.3}", r.x, r.lamp.p50_ms, r.naive.p50_ms)).collect::<Vec<_>>().join("; ")
}

pub fn ac2_speedup() -> (bool, String) {
    let started = Instant::now();
    let opts = BenchOptions::default();
    let p = plan(Scenario::Users, Preset::Desk, opts.seed);
    let x = *p.xs.last().unwrap();
    let spec = spec_at(Scenario::Users, &p, x);
    if spec.total_policies() != AC2_POLICIES || spec.n_locations != AC2_LOCATIONS {
        return (false, format!("desk plan gives {} policies over {} locations", spec.total_policies(), spec.n_locations));
    }
    match run_lookup_point(Scenario::Users, &spec, p.probe, x, &opts) {
        Ok(r) => {
            let elapsed = started.elapsed();
            (
                r.speedup >= AC2_MIN_SPEEDUP && elapsed < AC2_BUDGET,
                format!(
                    "{} policies, {} locations: lamp p50 {:.4} ms, naive p50 {:.2} ms, speedup {:.0}x (need >= {AC2_MIN_SPEEDUP}x); {:.1} s, limit {} s",
                    r.policies,
                    spec.n_locations,
                    r.lamp.p50_ms,
                    r.naive.p50_ms,
                    r.speedup,
                    elapsed.as_secs_f64(),
                    AC2_BUDGET.as_secs()
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

pub fn ac3_locations() -> (bool, String) {
    let rs = match sweep(Scenario::Locations) {
        Ok(rs) => rs,
        Err(e) => return (false, e),
    };
    let (first, last) = (&rs[0], &rs[rs.len() - 1]);
    let dlp = ratio(last.lamp.p50_ms, first.lamp.p50_ms);
    let naive = ratio(last.naive.p50_ms, first.naive.p50_ms);
    let span_ok = last.x == 10 * first.x;
    (
        span_ok && dlp <= AC3_MAX_DLP_GROWTH && naive >= AC3_MIN_NAIVE_GROWTH,
        format!(
            "{}->{} locations: lamp grew {dlp:.2}x (need <= {AC3_MAX_DLP_GROWTH}), naive grew {naive:.2}x (need >= {AC3_MIN_NAIVE_GROWTH}) [{}]",
            first.x,
            last.x,
            p50s(&rs)
        ),
    )
}

pub fn ac4_keywords() -> (bool, String) {
    let rs = match sweep(Scenario::Keywords) {
        Ok(rs) => rs,
        Err(e) => return (false, e),
    };
    let lamp: Vec<f64> = rs.iter().map(|r| r.lamp.p50_ms).collect();
    let spread = ratio(lamp.iter().cloned().fold(f64::MIN, f64::max), lamp.iter().cloned().fold(f64::MAX, f64::min));
    let fixed = rs.iter().all(|r| r.policies == rs[0].policies);
    let (s0, s1) = (rs[0].speedup, rs[rs.len() - 1].speedup);
    (
        fixed && spread <= AC4_MAX_DLP_SPREAD && s1 > s0,
        format!(
            "{} policies at every point: lamp max/min {spread:.2}x (need <= {AC4_MAX_DLP_SPREAD}), naive/lamp {s0:.0}x -> {s1:.0}x (need growth) [{}]",
            rs[0].policies,
            p50s(&rs)
        ),
    )
}

pub fn ac5_polloc() -> (bool, String) {
    let rs = match sweep(Scenario::Polloc) {
        Ok(rs) => rs,
        Err(e) => return (false, e),
    };
    let base = &rs[0];
    let linear = rs.iter().all(|r| ratio(r.lamp.p50_ms, base.lamp.p50_ms) <= ratio(r.x as f64, base.x as f64));
    let naive: Vec<f64> = rs.iter().map(|r| r.naive.p50_ms).collect();
    let naive_spread = ratio(naive.iter().cloned().fold(f64::MIN, f64::max), naive.iter().cloned().fold(f64::MAX, f64::min));
    let min_gap = rs.iter().map(|r| r.speedup).fold(f64::INFINITY, f64::min);
    let within_cap = rs.iter().all(|r| r.policies <= AC5_MAX_POLICIES);
    (
        within_cap && linear && naive_spread <= AC5_MAX_NAIVE_SPREAD && min_gap > AC5_MIN_NAIVE_OVER_DLP,
        format!(
            "{} policies per point; lamp within linear growth: {linear}; naive max/min {naive_spread:.2}x (need <= {AC5_MAX_NAIVE_SPREAD}); smallest naive/lamp {min_gap:.0}x (need > {AC5_MIN_NAIVE_OVER_DLP}) [{}]",
            rs.iter().map(|r| r.policies).max().unwrap_or(0),
            p50s(&rs)
        ),
    )
}

// ---- AC6 ----

/// Parallel and sequential matches serialize to the same bytes on several
/// group photos.
pub fn parallel_output_identical(candidates: usize, photos: u64) -> Result<usize, String> {
    let records: Vec<FaceRecord> =
        (0..candidates).map(|i| FaceRecord { user: user_id(i), vector: SeededEmbedder.identity(user_id(i).as_str()) }).collect();
    let cands: Vec<Candidate<'_>> = records
        .iter()
        .enumerate()
        .map(|(i, r)| Candidate { user: &r.user, vector: &r.vector, xi: if i % 3 == 0 { Sensitiveness::High } else { Sensitiveness::Low } })
        .collect();
    let matcher = Matcher::new(ToleranceConfig::default(), 0).map_err(|e| e.to_string())?;
    let mut comparisons = 0;
    for seed in 0..photos {
        let faces = group_photo(&records, GROUP_PHOTO_FACES, 0xac6 + seed);
        let par = matcher.match_parallel(&faces, &cands);
        let seq = matcher.match_sequential(&faces, &cands);
        let bytes = |m: &lamp_core::face::MatchOutcome| serde_json::to_vec(&m.matches).expect("matches serialize");
        if bytes(&par) != bytes(&seq) || par.comparisons != seq.comparisons {
            return Err(format!("photo {seed}: parallel and sequential outputs differ"));
        }
        comparisons = par.comparisons;
    }
    Ok(comparisons)
}

pub fn ac6_parallel_matching() -> (bool, String) {
    let opts = BenchOptions::default();
    let low = run_faces_point(100, &opts);
    let high = run_faces_point(AC6_CANDIDATES, &opts);
    let (low, high) = match (low, high) {
        (Ok(l), Ok(h)) => (l, h),
        (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
    };
    let identical = parallel_output_identical(AC6_CANDIDATES, 20);
    let workers = Matcher::new(ToleranceConfig::default(), 0).map(|m| m.workers()).unwrap_or(0);
    // In a faces result, `lamp` is the parallel arm and `naive` the sequential one.
    let par_growth = high.lamp.p50_ms - low.lamp.p50_ms;
    let seq_growth = high.naive.p50_ms - low.naive.p50_ms;
    let fast_enough = high.lamp.p95_ms < AC6_PARALLEL_BUDGET_MS;
    let growth_ok = seq_growth >= AC6_MIN_GROWTH_RATIO * par_growth;
    let (same, same_note) = match identical {
        Ok(c) => (c == GROUP_PHOTO_FACES * AC6_CANDIDATES, format!("byte-identical over 20 photos, {c} comparisons each")),
        Err(e) => (false, e),
    };
    (
        fast_enough && same && growth_ok,
        format!(
            "{workers} worker(s); parallel p95 at {AC6_CANDIDATES} = {:.2} ms (need < {AC6_PARALLEL_BUDGET_MS}); {same_note}; \
             100->{AC6_CANDIDATES} growth: sequential +{seq_growth:.2} ms, parallel +{par_growth:.2} ms, ratio {:.2} (need >= {AC6_MIN_GROWTH_RATIO})",
            high.lamp.p95_ms,
            seq_growth / par_growth
        ),
    )
}

// ---- AC7 ----

const ALICE: &str = "alice";

fn single_face_photo(d: f64, salt: &str) -> PhotoManifest {
    let face = SeededEmbedder.perturb(&gen::identity(ALICE), d, salt);
    let location =
        PhotoLocation::at(chrono::NaiveDate::from_ymd_opt(2019, 6, 1).unwrap().and_hms_opt(12, 0, 0).unwrap()).with_keyword("bar");
    PhotoManifest { photo_id: "p".into(), uploader: UserId::new("carol"), location, faces: vec![PhotoFace { index: 0, vector: face }] }
}

/// The triggering pid for alice's face, or None when it is left alone.
fn decide(policies: &[LampiPolicy], m: &PhotoManifest, matcher: &Matcher) -> Result<Option<PolicyId>, String> {
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let tree = DlpTree::build(taxonomy, TreeConfig::default(), policies).map_err(|e| e.to_string())?;
    let store: BTreeMap<PolicyId, LampiPolicy> = policies.iter().map(|p| (p.pid, p.clone())).collect();
    let faces: BTreeMap<UserId, FaceVector> = [(UserId::new(ALICE), gen::identity(ALICE))].into();
    let out = check_photo(m, &tree, &faces, &store, matcher).map_err(|e| e.to_string())?;
    Ok(out.decisions.first().map(|d| d.triggering_policy))
}

pub fn ac7_sensitiveness() -> (bool, String) {
    let t = ToleranceConfig::default();
    let distances = [t.low - AC7_EPSILON, t.low + AC7_EPSILON, t.high - AC7_EPSILON, t.high + AC7_EPSILON];
    let matchers = [Matcher::sequential(t), Matcher::new(t, 2).expect("pool builds")];
    let low = LampiPolicy::semantic(1, ALICE, "bar", TimeInterval::ANYTIME, Sensitiveness::Low);
    let high = LampiPolicy::semantic(2, ALICE, "entertainment", TimeInterval::ANYTIME, Sensitiveness::High);
    let mut cases = 0;
    for (i, &d) in distances.iter().enumerate() {
        let m = single_face_photo(d, &format!("ac7/{i}"));
        let actual = straight_distance(&m.faces[0].vector, &gen::identity(ALICE));
        if (actual - d).abs() > AC7_EPSILON / 100.0 {
            return (false, format!("constructed distance {d} came out as {actual}"));
        }
        for matcher in &matchers {
            // Expected pid per policy set: the strictest policy that still fires.
            let sets: [(&[LampiPolicy], Option<PolicyId>); 3] = [
                (std::slice::from_ref(&low), (d < t.low).then_some(low.pid)),
                (std::slice::from_ref(&high), (d < t.high).then_some(high.pid)),
                (
                    &[low.clone(), high.clone()],
                    if d < t.low {
                        Some(low.pid)
                    } else if d < t.high {
                        Some(high.pid)
                    } else {
                        None
                    },
                ),
            ];
            for (policies, want) in sets {
                let got = match decide(policies, &m, matcher) {
                    Ok(g) => g,
                    Err(e) => return (false, e),
                };
                if got != want {
                    return (
                        false,
                        format!("d = {d}, policies {:?}: got {got:?}, want {want:?}", policies.iter().map(|p| p.xi).collect::<Vec<_>>()),
                    );
                }
                let in_band = t.low < d && d < t.high;
                if in_band && got.is_some() != policies.iter().any(|p| p.xi == Sensitiveness::High) {
                    return (false, format!("d = {d} redacted {} without a High policy", got.is_some()));
                }
                cases += 1;
            }
        }
    }
    (true, format!("{cases} cases at d in {distances:?}, tolerances {} / {}, epsilon {AC7_EPSILON:e}", t.low, t.high))
}

// ---- AC8 ----

/// `2 + ceil(log_b n)`, computed with integers.
fn log_bound(b: usize, n: usize) -> usize {
    let mut levels = 0;
    let mut reach = 1usize;
    while reach < n {
        reach = reach.saturating_mul(b);
        levels += 1;
    }
    2 + levels
}

/// The stated bound, `2 + ceil(log_B n)`.
pub fn height_bound(fanout: usize, n: usize) -> usize {
    log_bound(fanout, n)
}

/// Every node off the two outer paths is at least half full, so height
/// stays within `2 + ceil(log_m n)` for `m = ceil(B / 2)` at any fanout.
pub fn half_fill_bound(fanout: usize, n: usize) -> usize {
    log_bound(fanout.div_ceil(2), n)
}

/// Smallest fanout at which half-full nodes imply the stated bound for
/// every tree size tested here.
pub const STATED_BOUND_MIN_FANOUT: usize = 16;

fn tree_shapes() -> Result<usize, String> {
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let mut trees = 0;
    for (i, &fanout) in [3usize, 4, 8, 16, 32, 64, 100].iter().enumerate() {
        for &n in &[1usize, 10, 500, 5000, 20_000] {
            let mut r = gen::rng(0xac8 + (i * 100 + n) as u64);
            let policies = gen::policies(&mut r, n, 50, &taxonomy);
            let sequential: Vec<LampiPolicy> = (0..n as u64)
                .map(|k| {
                    let a = lamp_core::policy::ExactAddress::new(&format!("{k:06} st"), "c", "s", "n");
                    LampiPolicy::exact(k + 1, "o", a, TimeInterval::ANYTIME, Sensitiveness::Low)
                })
                .collect();
            for set in [&policies, &sequential] {
                let mut tree =
                    DlpTree::build(taxonomy.clone(), TreeConfig { fanout, ..TreeConfig::default() }, set).map_err(|e| e.to_string())?;
                let shape = tree.verify()?;
                let n_exact = shape.exact.entries;
                if shape.exact.max_node_entries > fanout {
                    return Err(format!("node with {} entries at B = {fanout}", shape.exact.max_node_entries));
                }
                let bound =
                    if fanout >= STATED_BOUND_MIN_FANOUT { height_bound(fanout, n_exact) } else { half_fill_bound(fanout, n_exact) };
                if shape.exact.height > bound {
                    return Err(format!("height {} for {n_exact} entries at B = {fanout}, bound {bound}", shape.exact.height));
                }
                for p in set.iter().step_by(3) {
                    tree.remove(p.pid).map_err(|e| e.to_string())?;
                }
                let shape = tree.verify()?;
                if shape.exact.max_node_entries > fanout {
                    return Err(format!("after removals, node with {} entries at B = {fanout}", shape.exact.max_node_entries));
                }
                trees += 1;
            }
        }
    }
    Ok(trees)
}

fn metric_axioms() -> Result<usize, String> {
    let mut r = gen::rng(0x3e7);
    let vec = |r: &mut rand_chacha::ChaCha8Rng| {
        let scale = 10f64.powi(r.random_range(-3..3));
        let v: Vec<f64> = (0..lamp_core::face::FACE_DIM).map(|_| r.random_range(-1.0..1.0) * scale).collect();
        FaceVector::new(&v).unwrap()
    };
    let n = 5000;
    for i in 0..n {
        let (a, b, c) = (vec(&mut r), vec(&mut r), vec(&mut r));
        let (ab, ba, bc, ac) = (distance(&a, &b), distance(&b, &a), distance(&b, &c), distance(&a, &c));
        if distance(&a, &a) != 0.0 || ab != ba || ab < 0.0 {
            return Err(format!("triple {i}: identity, symmetry or sign fails"));
        }
        if ac > (ab + bc) * (1.0 + 1e-12) {
            return Err(format!("triple {i}: triangle inequality fails, {ac} > {ab} + {bc}"));
        }
        if (ab - straight_distance(&a, &b)).abs() > 1e-12 * ab.max(1.0) {
            return Err(format!("triple {i}: distance disagrees with the plain sum"));
        }
    }
    Ok(n)
}

/// A policy on keyword k applies to every descendant of k and to nothing above it.
fn monotone_ancestry() -> Result<usize, String> {
    let mut checked = 0;
    for seed in 0..50u64 {
        let mut r = gen::rng(0xa2c + seed);
        let size = r.random_range(2..200);
        let taxonomy = Arc::new(gen::taxonomy(&mut r, size));
        let ids: Vec<_> = taxonomy.ids().collect();
        let policies: Vec<LampiPolicy> = (0..r.random_range(1..400))
            .map(|i| {
                let k = taxonomy.keyword(*ids.choose(&mut r).unwrap());
                LampiPolicy::semantic(i as u64 + 1, "o", k, TimeInterval::ANYTIME, Sensitiveness::Low)
            })
            .collect();
        let tree = DlpTree::build(taxonomy.clone(), TreeConfig::default(), &policies).map_err(|e| e.to_string())?;
        let t = chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let mut found: HashMap<_, BTreeSet<PolicyId>> = HashMap::new();
        for &k in &ids {
            let got: BTreeSet<PolicyId> = tree.lookup_semantic(taxonomy.keyword(k), t).map_err(|e| e.to_string())?.into_iter().collect();
            let want: BTreeSet<PolicyId> = policies
                .iter()
                .filter(|p| match &p.loc {
                    Location::Semantic(s) => taxonomy.id(s.as_str()).is_some_and(|pk| taxonomy.is_ancestor_or_self(pk, k)),
                    Location::Exact(_) => false,
                })
                .map(|p| p.pid)
                .collect();
            if got != want {
                return Err(format!("seed {seed}, keyword {}: got {got:?}, want {want:?}", taxonomy.keyword(k)));
            }
            found.insert(k, got);
        }
        for &k in &ids {
            for c in taxonomy.children(k) {
                if !found[&k].is_subset(&found[&c]) {
                    return Err(format!("seed {seed}: {} sees less than its parent", taxonomy.keyword(c)));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Cut the policy log at every line boundary and at random bytes; the
/// reopened engine must hold exactly the policies of the complete lines.
fn crash_replay() -> Result<usize, String> {
    let taxonomy = Arc::new(SemanticTaxonomy::builtin());
    let mut r = gen::rng(0xc4a5);
    let src = tempfile::tempdir().map_err(|e| e.to_string())?;
    let open = |dir: &std::path::Path| {
        Engine::open(EngineConfig { data_dir: dir.to_owned(), ..EngineConfig::default() }).map_err(|e| e.to_string())
    };
    let pool = gen::policies(&mut r, 150, 20, &taxonomy);
    let mut states = vec![BTreeMap::new()];
    {
        let engine = open(src.path())?;
        let mut live: BTreeMap<PolicyId, LampiPolicy> = BTreeMap::new();
        for p in pool {
            if !live.is_empty() && r.random_bool(0.3) {
                let pid = *live.keys().nth(r.random_range(0..live.len())).unwrap();
                engine.remove_policy(pid).map_err(|e| e.to_string())?;
                live.remove(&pid);
                states.push(live.clone());
            }
            engine.add_policy(p.clone()).map_err(|e| e.to_string())?;
            live.insert(p.pid, p);
            states.push(live.clone());
        }
    }
    let log = std::fs::read(src.path().join(POLICY_LOG)).map_err(|e| e.to_string())?;
    let mut cuts: Vec<usize> = log.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i + 1).collect();
    cuts.extend((0..100).map(|_| r.random_range(0..=log.len())));
    cuts.push(0);
    let probes: Vec<PhotoLocation> = (0..20).map(|_| gen::probe(&mut r, &taxonomy)).collect();
    for &cut in &cuts {
        let dst = tempfile::tempdir().map_err(|e| e.to_string())?;
        std::fs::write(dst.path().join(POLICY_LOG), &log[..cut]).map_err(|e| e.to_string())?;
        let engine = open(dst.path())?;
        let complete = log[..cut].iter().filter(|&&b| b == b'\n').count();
        let want: Vec<LampiPolicy> = states[complete].values().cloned().collect();
        if engine.policies(None) != want {
            return Err(format!("cut at byte {cut}: reloaded policies differ from the first {complete} records"));
        }
        engine.verify()?;
        for probe in &probes {
            if engine.lookup(probe).map_err(|e| e.to_string())? != naive_scan(&want, &taxonomy, probe, DEFAULT_POINT_EPSILON) {
                return Err(format!("cut at byte {cut}: lookup after reload disagrees with the naive scan"));
            }
        }
    }
    Ok(cuts.len())
}

type Check = fn() -> Result<usize, String>;

pub fn ac8_invariants() -> (bool, String) {
    let started = Instant::now();
    let parts: [(&str, Check); 4] = [
        ("trees (fanout, height, enclosure)", tree_shapes),
        ("distance triples", metric_axioms),
        ("parent/child keyword pairs", monotone_ancestry),
        ("log cuts replayed", crash_replay),
    ];
    let mut notes = Vec::new();
    for (what, f) in parts {
        match f() {
            Ok(n) => notes.push(format!("{n} {what}")),
            Err(e) => return (false, format!("{what}: {e}")),
        }
    }
    let elapsed = started.elapsed();
    (elapsed < AC8_BUDGET, format!("{}; {:.1} s, limit {} s", notes.join(", "), elapsed.as_secs_f64(), AC8_BUDGET.as_secs()))
}
