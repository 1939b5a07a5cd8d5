//! Randomized policy sets, probes and photos over a small address grid, so
//! that probes hit stored policies often.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use lamp_core::dlp::PhotoLocation;
use lamp_core::enforce::PhotoManifest;
use lamp_core::face::{FaceVector, PhotoFace, SeededEmbedder};
use lamp_core::policy::{ExactAddress, GeoPoint, LampiPolicy, Sensitiveness, TimeInterval, UserId};
use lamp_core::taxonomy::{SemanticTaxonomy, ROOT_KEYWORD, ROOT_PARENT};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A four-level tree of `n` keywords with random shape.
pub fn taxonomy(r: &mut ChaCha8Rng, n: usize) -> SemanticTaxonomy {
    let mut rows = vec![(ROOT_KEYWORD.to_owned(), ROOT_PARENT.to_owned())];
    let mut depth = vec![0usize];
    for i in 1..n.max(1) {
        let parent = loop {
            let p = r.random_range(0..i);
            if depth[p] < 3 {
                break p;
            }
        };
        depth.push(depth[parent] + 1);
        rows.push((format!("k{i}"), rows[parent].0.clone()));
    }
    SemanticTaxonomy::from_pairs(rows).expect("generated rows form a tree")
}

fn keywords(t: &SemanticTaxonomy) -> Vec<String> {
    t.ids().map(|k| t.keyword(k).to_owned()).collect()
}

const NATIONS: [&str; 2] = ["france", "japan"];
const STATES: [&str; 2] = ["east", "west"];
const CITIES: [&str; 3] = ["arles", "nimes", "sete"];
const STREETS: [&str; 4] = ["1 quai", "2 quai", "7 rue haute", "9 rue basse"];

pub fn grid_address(r: &mut ChaCha8Rng) -> ExactAddress {
    let (n, s, c, a) = (r.random_range(0..2), r.random_range(0..2), r.random_range(0..3), r.random_range(0..4));
    let lat = 10.0 * n as f64 + 2.0 * s as f64 + 0.1 * c as f64 + 0.001 * a as f64;
    let lon = 20.0 * n as f64 + 3.0 * s as f64 + 0.2 * c as f64 + 0.002 * a as f64;
    ExactAddress::new(STREETS[a], CITIES[c], STATES[s], NATIONS[n]).with_point(GeoPoint::new(lat, lon).unwrap())
}

fn day(r: &mut ChaCha8Rng) -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() + chrono::Duration::days(r.random_range(0..90))
}

fn clock(r: &mut ChaCha8Rng) -> NaiveTime {
    NaiveTime::from_hms_opt(r.random_range(0..24), [0, 30][r.random_range(0..2)], 0).unwrap()
}

pub fn interval(r: &mut ChaCha8Rng) -> TimeInterval {
    match r.random_range(0..4) {
        0 => TimeInterval::ANYTIME,
        1 => {
            let (a, b) = (day(r), day(r));
            TimeInterval::dates(a.min(b), a.max(b))
        }
        2 => TimeInterval::daily(clock(r), clock(r)),
        _ => {
            let (a, b) = (day(r), day(r));
            TimeInterval::dates(a.min(b), a.max(b)).with_window(clock(r), clock(r))
        }
    }
}

/// Often lands exactly on a date or half-hour edge.
pub fn timestamp(r: &mut ChaCha8Rng) -> NaiveDateTime {
    let minute = if r.random_bool(0.5) { [0, 30][r.random_range(0..2)] } else { r.random_range(0..60) };
    day(r).and_hms_opt(r.random_range(0..24), minute, 0).unwrap()
}

pub fn owner(i: usize) -> String {
    format!("u{i}")
}

/// `n` policies over `owners` users, half exact at mixed granularity and
/// half semantic.
pub fn policies(r: &mut ChaCha8Rng, n: usize, owners: usize, t: &SemanticTaxonomy) -> Vec<LampiPolicy> {
    let kws = keywords(t);
    (0..n)
        .map(|i| {
            let pid = i as u64 + 1;
            let who = owner(r.random_range(0..owners.max(1)));
            let int = interval(r);
            let xi = if r.random_bool(0.5) { Sensitiveness::High } else { Sensitiveness::Low };
            if r.random_bool(0.5) {
                let full = grid_address(r);
                let mut address = match r.random_range(0..8) {
                    0 => full.prefix(1),
                    1 => full.prefix(2),
                    2 => full.prefix(3),
                    _ => full.prefix(4),
                };
                if address.depth() == 4 && r.random_bool(0.7) {
                    address = address.with_point(full.point().unwrap());
                }
                LampiPolicy::exact(pid, &who, address, int, xi)
            } else {
                LampiPolicy::semantic(pid, &who, kws.choose(r).unwrap(), int, xi)
            }
        })
        .collect()
}

/// Address only, point only, keywords only, or everything; points land
/// either inside or outside the match radius.
pub fn probe(r: &mut ChaCha8Rng, t: &SemanticTaxonomy) -> PhotoLocation {
    let kws = keywords(t);
    let mut loc = PhotoLocation::at(timestamp(r));
    let full = grid_address(r);
    let bare = full.prefix(4);
    let near = |r: &mut ChaCha8Rng| {
        let p = full.point().unwrap();
        let off = [0.0, 0.0002, 0.0004, 0.0007, 0.003][r.random_range(0..5)];
        GeoPoint::new(p.lat + off, p.lon - off / 2.0)
    };
    match r.random_range(0..4) {
        0 => loc.address = Some(bare),
        1 => loc.point = near(r),
        2 => {}
        _ => {
            loc.address = Some(bare);
            loc.point = near(r);
        }
    }
    let min_kw = usize::from(loc.address.is_none() && loc.point.is_none());
    for _ in 0..r.random_range(min_kw..=5) {
        if r.random_bool(0.05) {
            loc = loc.with_keyword("unlisted place");
        } else {
            loc = loc.with_keyword(kws.choose(r).unwrap());
        }
    }
    loc
}

pub fn identity(user: &str) -> FaceVector {
    SeededEmbedder.identity(user)
}

/// Displacements kept clear of the default tolerances 0.6 and 0.9.
pub const FACE_OFFSETS: [f64; 8] = [0.0, 0.2, 0.45, 0.55, 0.65, 0.8, 0.95, 1.2];

/// A photo at `location` with up to eight faces: owners seen at a random
/// offset, and strangers.
pub fn manifest(r: &mut ChaCha8Rng, id: usize, owners: usize, location: PhotoLocation) -> PhotoManifest {
    let n_faces = r.random_range(0..=8);
    let faces = (0..n_faces)
        .map(|i| {
            let vector = if r.random_bool(0.8) {
                let who = owner(r.random_range(0..owners.max(1)));
                let delta = *FACE_OFFSETS.choose(r).unwrap();
                SeededEmbedder.perturb(&identity(&who), delta, &format!("{id}/{i}"))
            } else {
                identity(&format!("stranger{id}/{i}"))
            };
            PhotoFace { index: i as u32, vector }
        })
        .collect();
    PhotoManifest { photo_id: format!("photo{id}"), uploader: UserId::new("uploader"), location, faces }
}
