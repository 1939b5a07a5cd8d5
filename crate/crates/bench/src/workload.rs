//! Seeded synthetic workloads: a nation/state/city/street address grid,
//! a four-level keyword taxonomy, and policies attached to locations.

use std::sync::Arc;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use lamp_core::dlp::PhotoLocation;
use lamp_core::face::{FaceRecord, PhotoFace, SeededEmbedder};
use lamp_core::policy::{
    ExactAddress, GeoPoint, LampiPolicy, Location, LocationType, PolicyId, SemanticKeyword, Sensitiveness, TimeInterval, UserId,
};
use lamp_core::taxonomy::{KeywordId, SemanticTaxonomy, ROOT_KEYWORD, ROOT_PARENT};
use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Number of generic categories directly under the root.
pub const GENERIC_CATEGORIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("infeasible workload: {0}")]
    InfeasibleSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoliciesPerLocation {
    Absolute(usize),
    PercentOfUsers(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub n_users: usize,
    pub n_locations: usize,
    /// Inclusive range of keywords per location, within 1..=5.
    pub keywords_per_location: (usize, usize),
    pub n_distinct_keywords: usize,
    pub policies_per_location: PoliciesPerLocation,
    /// Share of policies on exact addresses; the rest are semantic.
    pub exact_fraction: f64,
    /// Where a semantic policy lands: the location's own keyword, its
    /// parent category, or the generic category above that.
    pub semantic_granularity: [f64; 3],
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            n_users: 1000,
            n_locations: 100,
            keywords_per_location: (1, 5),
            n_distinct_keywords: 250,
            policies_per_location: PoliciesPerLocation::Absolute(10),
            exact_fraction: 0.5,
            semantic_granularity: [0.7, 0.2, 0.1],
            seed: 42,
        }
    }
}

impl WorkloadSpec {
    pub fn policies_per_location(&self) -> usize {
        match self.policies_per_location {
            PoliciesPerLocation::Absolute(n) => n,
            PoliciesPerLocation::PercentOfUsers(pct) => ((self.n_users as f64) * pct / 100.0).round() as usize,
        }
    }

    pub fn total_policies(&self) -> usize {
        self.n_locations * self.policies_per_location()
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::InfeasibleSpec(m));
        let ppl = self.policies_per_location();
        let (kmin, kmax) = self.keywords_per_location;
        if self.n_users == 0 || self.n_locations == 0 {
            return bad("need at least one user and one location".into());
        }
        if ppl > self.n_users {
            return bad(format!("{ppl} policies per location but only {} users", self.n_users));
        }
        if !(1 <= kmin && kmin <= kmax && kmax <= 5) {
            return bad(format!("keywords per location {kmin}..={kmax} outside 1..=5"));
        }
        if self.n_distinct_keywords < 1 + 2 * GENERIC_CATEGORIES + 1 {
            return bad(format!("need at least {} distinct keywords", 2 * GENERIC_CATEGORIES + 2));
        }
        if !(0.0..=1.0).contains(&self.exact_fraction) {
            return bad(format!("exact fraction {} outside [0, 1]", self.exact_fraction));
        }
        let g = self.semantic_granularity;
        if g.iter().any(|w| w.is_nan() || *w < 0.0) || g.iter().sum::<f64>() <= 0.0 {
            return bad("semantic granularity weights must be non-negative and not all zero".into());
        }
        Ok(())
    }
}

/// A place in the grid with its address and leaf keywords.
#[derive(Debug, Clone)]
pub struct SyntheticLocation {
    pub address: ExactAddress,
    pub keywords: Vec<KeywordId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// Address, coordinates and keywords.
    Full,
    /// Address and coordinates only.
    ExactOnly,
    /// Keywords only.
    SemanticOnly,
}

#[derive(Debug)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub taxonomy: Arc<SemanticTaxonomy>,
    pub locations: Vec<SyntheticLocation>,
    pub policies: Vec<LampiPolicy>,
    users: Vec<UserId>,
    leaves: Vec<KeywordId>,
}

/// Root, a fixed set of generic categories, mid-level categories, and
/// leaf place types, `n` keywords in all.
pub fn synthetic_taxonomy(n: usize) -> SemanticTaxonomy {
    let n_mid = ((n - 1 - GENERIC_CATEGORIES) / 6).max(GENERIC_CATEGORIES);
    let n_leaf = n - 1 - GENERIC_CATEGORIES - n_mid;
    let mut rows: Vec<(String, String)> = vec![(ROOT_KEYWORD.into(), ROOT_PARENT.into())];
    rows.extend((0..GENERIC_CATEGORIES).map(|g| (format!("generic {g}"), ROOT_KEYWORD.to_owned())));
    rows.extend((0..n_mid).map(|m| (format!("category {m}"), format!("generic {}", m % GENERIC_CATEGORIES))));
    rows.extend((0..n_leaf).map(|l| (format!("place {l}"), format!("category {}", l % n_mid))));
    SemanticTaxonomy::from_pairs(rows).expect("synthetic taxonomy is well formed")
}

fn grid(n_locations: usize, rng: &mut ChaCha8Rng) -> Vec<ExactAddress> {
    // Up to 10 nations x 10 states x 10 cities; streets fill the rest.
    let n_cities = n_locations.clamp(1, 1000);
    let nations: Vec<Arc<str>> = (0..10).map(|n| Arc::from(format!("nation {n}"))).collect();
    let states: Vec<Arc<str>> = (0..100).map(|s| Arc::from(format!("state {} {}", s / 10, s % 10))).collect();
    let cities: Vec<Arc<str>> = (0..1000).map(|c| Arc::from(format!("city {} {} {}", c / 100, (c / 10) % 10, c % 10))).collect();
    (0..n_locations)
        .map(|i| {
            let city = (i % n_cities) * (1000 / n_cities);
            let (n, s) = (city / 100, city / 10);
            let street = i / n_cities;
            let lat = -45.0 + 9.0 * n as f64 + 0.9 * (s % 10) as f64 + 0.09 * (city % 10) as f64 + rng.random_range(0.0..0.08);
            let lon = -150.0 + 30.0 * n as f64 + 3.0 * (s % 10) as f64 + 0.3 * (city % 10) as f64 + rng.random_range(0.0..0.28);
            ExactAddress::from_shared(
                Arc::from(format!("{street} main street")),
                cities[city].clone(),
                states[s].clone(),
                nations[n].clone(),
            )
            .with_point(GeoPoint::new(lat, lon).expect("grid stays in range"))
        })
        .collect()
}

fn random_interval(rng: &mut ChaCha8Rng) -> TimeInterval {
    let year_start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let dates = |rng: &mut ChaCha8Rng| {
        let start = year_start + Duration::days(rng.random_range(0..365));
        let end = start + Duration::days(rng.random_range(0..120));
        TimeInterval::dates(start, end)
    };
    let window = |rng: &mut ChaCha8Rng| {
        (NaiveTime::from_hms_opt(rng.random_range(0..24), 0, 0).unwrap(), NaiveTime::from_hms_opt(rng.random_range(0..24), 59, 59).unwrap())
    };
    match rng.random_range(0..10) {
        0..=3 => TimeInterval::ANYTIME,
        4..=5 => dates(rng),
        6..=7 => {
            let (a, b) = window(rng);
            TimeInterval::daily(a, b)
        }
        _ => {
            let (a, b) = window(rng);
            dates(rng).with_window(a, b)
        }
    }
}

pub fn random_timestamp(rng: &mut ChaCha8Rng) -> NaiveDateTime {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    start + Duration::seconds(rng.random_range(0..365 * 86_400))
}

pub fn user_id(i: usize) -> UserId {
    UserId::new(format!("user{i:07}"))
}

impl Workload {
    pub fn generate(spec: &WorkloadSpec) -> Result<Workload, WorkloadError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let taxonomy = Arc::new(synthetic_taxonomy(spec.n_distinct_keywords));
        let leaves: Vec<KeywordId> = taxonomy.ids().filter(|&k| taxonomy.depth(k) == 3).collect();
        let keyword_arcs: Vec<SemanticKeyword> = taxonomy.ids().map(|k| SemanticKeyword::from_shared(taxonomy.keyword_arc(k))).collect();
        let users: Vec<UserId> = (0..spec.n_users).map(user_id).collect();

        let (kmin, kmax) = spec.keywords_per_location;
        let locations: Vec<SyntheticLocation> = grid(spec.n_locations, &mut rng)
            .into_iter()
            .map(|address| {
                let k = rng.random_range(kmin..=kmax).min(leaves.len());
                let keywords = index::sample(&mut rng, leaves.len(), k).into_iter().map(|i| leaves[i]).collect();
                SyntheticLocation { address, keywords }
            })
            .collect();

        let ppl = spec.policies_per_location();
        let g = spec.semantic_granularity;
        let g_total: f64 = g.iter().sum();
        let mut policies = Vec::with_capacity(spec.total_policies());
        let mut pid = 1u64;
        for loc in &locations {
            for u in index::sample(&mut rng, users.len(), ppl) {
                let int = random_interval(&mut rng);
                let xi = if rng.random_bool(0.5) { Sensitiveness::High } else { Sensitiveness::Low };
                let (typ, location) = if rng.random_bool(spec.exact_fraction) {
                    (LocationType::E, Location::Exact(loc.address.clone()))
                } else {
                    let mut k = *loc.keywords.choose(&mut rng).expect("locations carry keywords");
                    let r = rng.random_range(0.0..g_total);
                    let climb = if r < g[0] {
                        0
                    } else if r < g[0] + g[1] {
                        1
                    } else {
                        2
                    };
                    for _ in 0..climb {
                        k = taxonomy.parent(k).expect("leaves sit three levels down");
                    }
                    (LocationType::S, Location::Semantic(keyword_arcs[k.index()].clone()))
                };
                policies.push(LampiPolicy { pid: PolicyId(pid), owner: users[u].clone(), typ, loc: location, int, xi });
                pid += 1;
            }
        }
        Ok(Workload { spec: spec.clone(), taxonomy, locations, policies, users, leaves })
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn leaf_keywords(&self) -> &[KeywordId] {
        &self.leaves
    }

    /// A photo taken at one of the generated locations at a random time.
    pub fn probe(&self, rng: &mut ChaCha8Rng, kind: ProbeKind) -> PhotoLocation {
        let loc = self.locations.choose(rng).expect("workload has locations");
        let mut photo = PhotoLocation::at(random_timestamp(rng));
        if kind != ProbeKind::SemanticOnly {
            let a = &loc.address;
            photo.address = Some(ExactAddress::new(a.street(), a.city(), a.state(), a.nation()));
            photo.point = a.point();
        }
        if kind != ProbeKind::ExactOnly {
            photo.keywords = loc.keywords.iter().map(|&k| SemanticKeyword::from_shared(self.taxonomy.keyword_arc(k))).collect();
        }
        photo
    }

    /// Enrolled face of user `i`, derived on demand.
    pub fn record(&self, i: usize) -> FaceRecord {
        let user = self.users[i].clone();
        let vector = SeededEmbedder.identity(user.as_str());
        FaceRecord { user, vector }
    }

    /// One JSON line per policy, for persisting or diffing workloads.
    pub fn policy_log(&self) -> String {
        let mut out = String::new();
        for p in &self.policies {
            out.push_str(&serde_json::to_string(p).expect("policies serialize"));
            out.push('\n');
        }
        out
    }
}

/// A group photo of `n_faces`: about half are noisy shots of the first
/// candidates, the rest strangers.
pub fn group_photo(candidates: &[FaceRecord], n_faces: usize, seed: u64) -> Vec<PhotoFace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_faces)
        .map(|i| {
            let vector = if !candidates.is_empty() && i % 2 == 0 {
                let who = &candidates[rng.random_range(0..candidates.len())];
                SeededEmbedder.perturb(&who.vector, rng.random_range(0.1..1.0), &format!("group {seed} {i}"))
            } else {
                SeededEmbedder.identity(&format!("stranger {seed} {i}"))
            };
            PhotoFace { index: i as u32, vector }
        })
        .collect()
}
