mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use common::*;
use lamp::engine::POLICY_LOG;
use lamp::store::{replay, JsonlLog, LogRecord, PolicyStore};
use lamp::ErrorKind;
use lamp_core::dlp::{naive_scan, DlpTree, PhotoLocation, TreeConfig, DEFAULT_POINT_EPSILON};
use lamp_core::face::{FaceRecord, FaceVector, FACE_DIM};
use lamp_core::policy::{ExactAddress, LampiPolicy, PolicyId, Sensitiveness, TimeInterval, UserId};
use lamp_core::taxonomy::SemanticTaxonomy;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KEYWORDS: [&str; 6] = ["bar", "university", "entertainment", "hospital", "any place", "shopping mall"];

fn address(r: &mut ChaCha8Rng) -> ExactAddress {
    let city = ["paris", "lyon"][r.random_range(0..2)];
    let street = format!("{} rue {}", r.random_range(1..4), ["a", "b"][r.random_range(0..2)]);
    match r.random_range(0..4) {
        0 => ExactAddress::new("", city, "idf", "france"),
        _ => ExactAddress::new(&street, city, "idf", "france"),
    }
}

fn interval(r: &mut ChaCha8Rng) -> TimeInterval {
    let d = |r: &mut ChaCha8Rng| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(r.random_range(0..60));
    match r.random_range(0..3) {
        0 => TimeInterval::ANYTIME,
        1 => {
            let (a, b) = (d(r), d(r));
            TimeInterval::dates(a.min(b), a.max(b))
        }
        _ => TimeInterval::daily(
            NaiveTime::from_hms_opt(r.random_range(0..24), 0, 0).unwrap(),
            NaiveTime::from_hms_opt(r.random_range(0..24), 30, 0).unwrap(),
        ),
    }
}

fn policy(r: &mut ChaCha8Rng, pid: u64) -> LampiPolicy {
    let owner = format!("u{}", r.random_range(0..5));
    let xi = if r.random_bool(0.5) { Sensitiveness::High } else { Sensitiveness::Low };
    if r.random_bool(0.5) {
        LampiPolicy::exact(pid, &owner, address(r), interval(r), xi)
    } else {
        LampiPolicy::semantic(pid, &owner, KEYWORDS[r.random_range(0..KEYWORDS.len())], interval(r), xi)
    }
}

fn probe(r: &mut ChaCha8Rng) -> PhotoLocation {
    let t: NaiveDateTime = (NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(r.random_range(0..60)))
        .and_hms_opt(r.random_range(0..24), r.random_range(0..60), 0)
        .unwrap();
    let mut loc = PhotoLocation::at(t).with_address(address(r));
    if r.random_bool(0.7) {
        loc = loc.with_keyword(KEYWORDS[r.random_range(0..KEYWORDS.len())]);
    }
    loc
}

#[derive(Debug, Clone)]
enum Op {
    Add(LampiPolicy),
    Remove(PolicyId),
}

/// A random valid sequence of adds and removes, with the logical state
/// after each one, tracked without the store.
fn scenario(seed: u64, n_ops: usize) -> (Vec<Op>, Vec<BTreeMap<PolicyId, LampiPolicy>>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut live: BTreeMap<PolicyId, LampiPolicy> = BTreeMap::new();
    let mut states = vec![live.clone()];
    let mut ops = Vec::new();
    let mut next = 1;
    for _ in 0..n_ops {
        if !live.is_empty() && r.random_bool(0.3) {
            let pid = *live.keys().nth(r.random_range(0..live.len())).unwrap();
            live.remove(&pid);
            ops.push(Op::Remove(pid));
        } else {
            let p = policy(&mut r, next);
            next += 1;
            live.insert(p.pid, p.clone());
            ops.push(Op::Add(p));
        }
        states.push(live.clone());
    }
    (ops, states)
}

fn run_ops(dir: &Path, ops: &[Op]) {
    let engine = engine_at(dir);
    for op in ops {
        match op {
            Op::Add(p) => {
                engine.add_policy(p.clone()).unwrap();
            }
            Op::Remove(pid) => {
                engine.remove_policy(*pid).unwrap();
            }
        }
    }
}

fn sorted(mut v: Vec<PolicyId>) -> Vec<PolicyId> {
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_log_prefix_reloads_to_the_logical_state(seed in any::<u64>(), n_ops in 1usize..40, cut_seed in any::<u64>()) {
        let (ops, states) = scenario(seed, n_ops);
        let src = tempfile::tempdir().unwrap();
        run_ops(src.path(), &ops);
        let log = std::fs::read(src.path().join(POLICY_LOG)).unwrap();
        prop_assert_eq!(log.iter().filter(|&&b| b == b'\n').count(), ops.len());

        let taxonomy = Arc::new(SemanticTaxonomy::builtin());
        let mut r = ChaCha8Rng::seed_from_u64(cut_seed);
        let mut cuts: Vec<usize> = (0..6).map(|_| r.random_range(0..=log.len())).collect();
        cuts.extend([0, log.len()]);
        for cut in cuts {
            let dst = tempfile::tempdir().unwrap();
            std::fs::write(dst.path().join(POLICY_LOG), &log[..cut]).unwrap();
            let engine = engine_at(dst.path());
            let complete = log[..cut].iter().filter(|&&b| b == b'\n').count();
            let want = &states[complete];
            prop_assert_eq!(engine.policies(None), want.values().cloned().collect::<Vec<_>>());
            engine.verify().map_err(TestCaseError::fail)?;

            let fresh = DlpTree::build(taxonomy.clone(), TreeConfig::default(), want.values()).unwrap();
            let policies: Vec<LampiPolicy> = want.values().cloned().collect();
            for _ in 0..20 {
                let loc = probe(&mut r);
                let got = engine.lookup(&loc).unwrap();
                prop_assert_eq!(&got, &sorted(fresh.lookup(&loc).unwrap()));
                prop_assert_eq!(&got, &naive_scan(&policies, &taxonomy, &loc, DEFAULT_POINT_EPSILON));
            }
        }
    }
}

#[test]
fn torn_tail_is_cut_and_appends_continue() {
    let (ops, states) = scenario(7, 10);
    let dir = tempfile::tempdir().unwrap();
    run_ops(dir.path(), &ops);
    let path = dir.path().join(POLICY_LOG);
    let mut log = std::fs::read(&path).unwrap();
    log.extend_from_slice(br#"{"op":"upsert","policy":{"pid":99,"ow"#);
    std::fs::write(&path, &log).unwrap();

    let engine = engine_at(dir.path());
    assert_eq!(engine.policy_count(), states[10].len());
    engine.add_policy(LampiPolicy::semantic(500, "zed", "bar", TimeInterval::ANYTIME, Sensitiveness::Low)).unwrap();
    drop(engine);

    let reopened = engine_at(dir.path());
    assert_eq!(reopened.policy_count(), states[10].len() + 1);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().all(|l| serde_json::from_str::<LogRecord>(l).is_ok()));
}

#[test]
fn corrupt_middle_line_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(POLICY_LOG);
    let good = serde_json::to_string(&LogRecord::Remove { pid: PolicyId(1) }).unwrap();
    std::fs::write(&path, format!("{good}\nnot json\n{good}\n")).unwrap();
    let err = lamp::Engine::open(config_at(dir.path())).unwrap_err();
    assert_eq!(err.code(), "CorruptLog");
    assert_eq!(err.kind(), ErrorKind::Io);
    assert!(err.to_string().contains("line 2"));
}

#[test]
fn replay_matches_the_store() {
    let (ops, states) = scenario(3, 30);
    let dir = tempfile::tempdir().unwrap();
    run_ops(dir.path(), &ops);
    let (_, records) = JsonlLog::open::<LogRecord>(&dir.path().join(POLICY_LOG)).unwrap();
    assert_eq!(replay(&records), states[30]);
    assert_eq!(PolicyStore::open(&dir.path().join(POLICY_LOG)).unwrap().policies(), &states[30]);
}

#[test]
fn log_lines_use_the_policy_wire_form() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_at(dir.path());
    engine.add_policy_json(&bob_paris().to_string()).unwrap();
    engine.remove_policy(PolicyId(1)).unwrap();
    let text = std::fs::read_to_string(dir.path().join(POLICY_LOG)).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["op"], "upsert");
    assert_eq!(lines[0]["policy"]["typ"], "E");
    assert_eq!(lines[0]["policy"]["xi"], "Low");
    assert_eq!(lines[0]["policy"]["int"]["date_start"], "2019-11-15");
    assert_eq!(lines[1], serde_json::json!({"op": "remove", "pid": 1}));
}

#[test]
fn enrolled_vectors_survive_reload_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let awkward = [0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, -0.0, 1e300, -123456.78901234568];
    let mut originals = Vec::new();
    {
        let engine = engine_at(dir.path());
        for u in 0..20 {
            let mut v: Vec<f64> = (0..FACE_DIM).map(|_| r.random_range(-1.0..1.0) * 10f64.powi(r.random_range(-20..20))).collect();
            v[..awkward.len()].copy_from_slice(&awkward);
            let record = FaceRecord { user: UserId::new(format!("user{u}")), vector: FaceVector::new(&v).unwrap() };
            originals.push(record.clone());
            engine.enroll(record).unwrap();
        }
        // Re-enrollment replaces the earlier vector.
        let replacement = FaceRecord { user: UserId::new("user0"), vector: FaceVector::basis(5) };
        originals[0] = replacement.clone();
        engine.enroll(replacement).unwrap();
    }
    let (_, records) = JsonlLog::open::<FaceRecord>(&dir.path().join(lamp::engine::FACE_LOG)).unwrap();
    assert_eq!(records.len(), 21);
    let engine = engine_at(dir.path());
    assert_eq!(engine.face_count(), 20);
    let last: BTreeMap<_, _> = records.into_iter().map(|f| (f.user.clone(), f)).collect();
    for o in &originals {
        let got = &last[&o.user];
        let bits = |v: &FaceVector| v.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&got.vector), bits(&o.vector), "{}", o.user);
    }
}
