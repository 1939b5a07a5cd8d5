//! The five benchmark scenarios and their desk/paper presets.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use lamp_core::dlp::{naive_scan, DlpTree, TreeConfig};
use lamp_core::face::{Candidate, FaceError, FaceRecord, Matcher, ToleranceConfig};
use lamp_core::policy::Sensitiveness;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::stats::Summary;
use crate::workload::{group_photo, user_id, PoliciesPerLocation, ProbeKind, Workload, WorkloadError, WorkloadSpec};
use lamp_core::face::SeededEmbedder;

/// Faces in the group photo used by the `faces` scenario.
pub const GROUP_PHOTO_FACES: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Users,
    Locations,
    Keywords,
    Polloc,
    Faces,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::Users, Scenario::Locations, Scenario::Keywords, Scenario::Polloc, Scenario::Faces];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Users => "users",
            Scenario::Locations => "locations",
            Scenario::Keywords => "keywords",
            Scenario::Polloc => "polloc",
            Scenario::Faces => "faces",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| BenchError::UnknownScenario(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// User, location and policy counts scaled down to run on a laptop.
    Desk,
    /// Full experiment sizes; needs a lot of memory.
    Paper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }
}

impl FromStr for Preset {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            _ => Err(BenchError::UnknownPreset(s.to_owned())),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error("{scenario} at x={x}: tree and naive scan disagree on probe {probe}")]
    Mismatch { scenario: Scenario, x: usize, probe: usize },
    #[error("{scenario} at x={x}: parallel and sequential matching disagree on probe {probe}")]
    MatchMismatch { scenario: Scenario, x: usize, probe: usize },
    #[error("unknown scenario {0:?}; expected users, locations, keywords, polloc or faces")]
    UnknownScenario(String),
    #[error("unknown preset {0:?}; expected desk or paper")]
    UnknownPreset(String),
    #[error("need at least one probe")]
    NoProbes,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub seed: u64,
    /// Timed probes per point.
    pub probes: usize,
    /// Untimed probes run first at each point.
    pub warmup: usize,
    /// Worker threads for parallel matching; 0 means one per CPU.
    pub workers: usize,
    /// Override the preset's x-axis values.
    pub xs: Option<Vec<usize>>,
    pub fanout: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { seed: 2019, probes: 100, warmup: 10, workers: 0, xs: None, fanout: lamp_core::dlp::DEFAULT_FANOUT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub scenario: Scenario,
    pub x: usize,
    pub lamp: Summary,
    pub naive: Summary,
    /// naive p50 over lamp p50.
    pub speedup: f64,
    /// Per probe: policies scanned by the naive arm, or face pairs compared.
    pub comparisons: usize,
    pub policies: usize,
    /// Mean number of policies (or face matches) returned per probe.
    pub mean_results: f64,
}

/// Sizes for one scenario under a preset.
#[derive(Debug, Clone)]
pub struct ScenarioPlan {
    pub base: WorkloadSpec,
    pub xs: Vec<usize>,
    pub probe: ProbeKind,
    /// Hold total policies at this count while sweeping policies per location.
    pub fixed_total: Option<usize>,
}

pub fn plan(scenario: Scenario, preset: Preset, seed: u64) -> ScenarioPlan {
    // Paper sizes divide by 100 for desk runs; locations divide by 10 so
    // the desk grid still has thousands of places.
    let (users, locations, ppl, total) = match preset {
        Preset::Desk => (10_000, 10_000, 100, 1_000_000),
        Preset::Paper => (1_000_000, 100_000, 1000, 100_000_000),
    };
    let base = WorkloadSpec {
        n_users: users,
        n_locations: locations,
        n_distinct_keywords: 500,
        policies_per_location: PoliciesPerLocation::Absolute(ppl),
        seed,
        ..WorkloadSpec::default()
    };
    let five = |lo: usize, hi: usize| vec![lo, lo + (hi - lo) / 4, lo + (hi - lo) / 2, lo + 3 * (hi - lo) / 4, hi];
    match scenario {
        Scenario::Users => ScenarioPlan { xs: five(users / 10, users), probe: ProbeKind::Full, fixed_total: None, base },
        Scenario::Locations => ScenarioPlan { xs: five(locations / 10, locations), probe: ProbeKind::ExactOnly, fixed_total: None, base },
        Scenario::Keywords => ScenarioPlan {
            xs: vec![250, 500, 1000, 2500, 5000],
            probe: ProbeKind::SemanticOnly,
            fixed_total: None,
            base: WorkloadSpec { keywords_per_location: (5, 5), ..base },
        },
        Scenario::Polloc => ScenarioPlan {
            // 0.1% to 1% of users per location.
            xs: five(users / 1000, users / 100),
            probe: ProbeKind::ExactOnly,
            fixed_total: Some(total),
            base,
        },
        Scenario::Faces => ScenarioPlan { xs: vec![100, 500, 1000, 2500, 5000], probe: ProbeKind::Full, fixed_total: None, base },
    }
}

/// Workload spec for one x-axis point.
pub fn spec_at(scenario: Scenario, plan: &ScenarioPlan, x: usize) -> WorkloadSpec {
    let mut spec = plan.base.clone();
    match scenario {
        Scenario::Users => spec.n_users = x,
        Scenario::Locations => spec.n_locations = x,
        Scenario::Keywords => spec.n_distinct_keywords = x,
        Scenario::Polloc => {
            spec.policies_per_location = PoliciesPerLocation::Absolute(x);
            spec.n_locations = plan.fixed_total.map_or(spec.n_locations, |t| (t / x.max(1)).max(1));
        }
        Scenario::Faces => {}
    }
    spec
}

pub fn run_scenario(scenario: Scenario, preset: Preset, opts: &BenchOptions) -> Result<Vec<BenchResult>, BenchError> {
    if opts.probes == 0 {
        return Err(BenchError::NoProbes);
    }
    let plan = plan(scenario, preset, opts.seed);
    let xs = opts.xs.clone().unwrap_or_else(|| plan.xs.clone());
    xs.into_iter()
        .map(|x| {
            let r = match scenario {
                Scenario::Faces => run_faces_point(x, opts),
                _ => run_lookup_point(scenario, &spec_at(scenario, &plan, x), plan.probe, x, opts),
            };
            if let Ok(r) = &r {
                log::info!(
                    "{scenario} x={x}: lamp p50 {:.4} ms, naive p50 {:.4} ms, speedup {:.1}",
                    r.lamp.p50_ms,
                    r.naive.p50_ms,
                    r.speedup
                );
            }
            r
        })
        .collect()
}

/// Time tree lookup against the naive scan at one workload size. Every
/// probe's two result sets must agree.
pub fn run_lookup_point(
    scenario: Scenario,
    spec: &WorkloadSpec,
    probe_kind: ProbeKind,
    x: usize,
    opts: &BenchOptions,
) -> Result<BenchResult, BenchError> {
    let workload = Workload::generate(spec)?;
    let config = TreeConfig { fanout: opts.fanout, ..TreeConfig::default() };
    let tree = DlpTree::build(workload.taxonomy.clone(), config, &workload.policies).expect("generated policies index cleanly");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0f98_06e5);
    let probes: Vec<_> = (0..opts.warmup + opts.probes).map(|_| workload.probe(&mut rng, probe_kind)).collect();

    let mut lamp_ms = Vec::with_capacity(opts.probes);
    let mut naive_ms = Vec::with_capacity(opts.probes);
    let mut results = 0usize;
    for (i, probe) in probes.iter().enumerate() {
        let started = Instant::now();
        let fast = tree.lookup(probe).expect("probe keywords come from the taxonomy");
        let lamp = started.elapsed();
        let started = Instant::now();
        let slow = naive_scan(&workload.policies, &workload.taxonomy, probe, config.point_epsilon);
        let naive = started.elapsed();
        let mut fast_sorted = fast.clone();
        fast_sorted.sort_unstable();
        if fast_sorted != slow {
            return Err(BenchError::Mismatch { scenario, x, probe: i });
        }
        if i >= opts.warmup {
            lamp_ms.push(lamp.as_secs_f64() * 1e3);
            naive_ms.push(naive.as_secs_f64() * 1e3);
            results += fast.len();
        }
    }
    Ok(finish(scenario, x, lamp_ms, naive_ms, workload.policies.len(), workload.policies.len(), results, opts.probes))
}

/// Time parallel against sequential matching of an 18-face group photo
/// against `candidates` enrolled records.
pub fn run_faces_point(candidates: usize, opts: &BenchOptions) -> Result<BenchResult, BenchError> {
    let records: Vec<FaceRecord> =
        (0..candidates).map(|i| FaceRecord { user: user_id(i), vector: SeededEmbedder.identity(user_id(i).as_str()) }).collect();
    let cands: Vec<Candidate<'_>> = records
        .iter()
        .enumerate()
        .map(|(i, r)| Candidate { user: &r.user, vector: &r.vector, xi: if i % 2 == 0 { Sensitiveness::High } else { Sensitiveness::Low } })
        .collect();
    let matcher = Matcher::new(ToleranceConfig::default(), opts.workers)?;

    let mut par_ms = Vec::with_capacity(opts.probes);
    let mut seq_ms = Vec::with_capacity(opts.probes);
    let mut comparisons = 0;
    let mut results = 0;
    for i in 0..opts.warmup + opts.probes {
        let faces = group_photo(&records, GROUP_PHOTO_FACES, opts.seed.wrapping_add(i as u64));
        let started = Instant::now();
        let par = matcher.match_parallel(&faces, &cands);
        let par_t = started.elapsed();
        let started = Instant::now();
        let seq = matcher.match_sequential(&faces, &cands);
        let seq_t = started.elapsed();
        if par != seq {
            return Err(BenchError::MatchMismatch { scenario: Scenario::Faces, x: candidates, probe: i });
        }
        comparisons = par.comparisons;
        if i >= opts.warmup {
            par_ms.push(par_t.as_secs_f64() * 1e3);
            seq_ms.push(seq_t.as_secs_f64() * 1e3);
            results += par.matches.len();
        }
    }
    Ok(finish(Scenario::Faces, candidates, par_ms, seq_ms, comparisons, candidates, results, opts.probes))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scenario: Scenario,
    x: usize,
    lamp_ms: Vec<f64>,
    naive_ms: Vec<f64>,
    comparisons: usize,
    policies: usize,
    results: usize,
    probes: usize,
) -> BenchResult {
    let lamp = Summary::of(lamp_ms);
    let naive = Summary::of(naive_ms);
    BenchResult {
        scenario,
        x,
        speedup: naive.p50_ms / lamp.p50_ms.max(f64::MIN_POSITIVE),
        lamp,
        naive,
        comparisons,
        policies,
        mean_results: results as f64 / probes as f64,
    }
}
