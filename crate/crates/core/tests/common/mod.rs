#![allow(dead_code)]

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use lamp_core::dlp::PhotoLocation;
use lamp_core::policy::{ExactAddress, GeoPoint, LampiPolicy, Sensitiveness, TimeInterval};
use lamp_core::taxonomy::{SemanticTaxonomy, ROOT_KEYWORD, ROOT_PARENT};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn at(y: i32, m: u32, d: u32, h: u32, min: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(h, min, 0).unwrap()
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).unwrap()
}

/// Random tree: every keyword after the root picks a parent among earlier
/// keywords that still leave room under the four-level cap.
pub fn random_taxonomy(rng: &mut ChaCha8Rng, n: usize) -> SemanticTaxonomy {
    let mut rows = vec![(ROOT_KEYWORD.to_owned(), ROOT_PARENT.to_owned())];
    let mut depth = vec![0usize];
    for i in 1..n {
        let parent = loop {
            let p = rng.random_range(0..i);
            if depth[p] < 3 {
                break p;
            }
        };
        depth.push(depth[parent] + 1);
        rows.push((format!("kw{i}"), rows[parent].0.clone()));
    }
    SemanticTaxonomy::from_pairs(rows).unwrap()
}

const NATIONS: &[&str] = &["france", "usa"];
const STATES: &[&str] = &["north", "south"];
const CITIES: &[&str] = &["alpha", "beta", "gamma"];
const STREETS: &[&str] = &["1 main st", "2 main st", "3 oak ave", "4 elm rd", "5 pine ln"];

/// A full address from a small grid, with a point derived from its grid cell.
pub fn grid_address(rng: &mut ChaCha8Rng) -> ExactAddress {
    let (n, s, c, a) = (
        rng.random_range(0..NATIONS.len()),
        rng.random_range(0..STATES.len()),
        rng.random_range(0..CITIES.len()),
        rng.random_range(0..STREETS.len()),
    );
    let lat = 10.0 * n as f64 + 2.0 * s as f64 + 0.1 * c as f64 + 0.001 * a as f64;
    let lon = 20.0 * n as f64 + 3.0 * s as f64 + 0.2 * c as f64 + 0.002 * a as f64;
    ExactAddress::new(STREETS[a], CITIES[c], STATES[s], NATIONS[n]).with_point(GeoPoint::new(lat, lon).unwrap())
}

pub fn random_interval(rng: &mut ChaCha8Rng) -> TimeInterval {
    let date = |rng: &mut ChaCha8Rng| NaiveDate::from_ymd_opt(2019, rng.random_range(1..=12), rng.random_range(1..=28)).unwrap();
    let time = |rng: &mut ChaCha8Rng| hm(rng.random_range(0..24), [0, 30][rng.random_range(0..2)]);
    match rng.random_range(0..4) {
        0 => TimeInterval::ANYTIME,
        1 => {
            let (a, b) = (date(rng), date(rng));
            TimeInterval::dates(a.min(b), a.max(b))
        }
        2 => TimeInterval::daily(time(rng), time(rng)),
        _ => {
            let (a, b) = (date(rng), date(rng));
            TimeInterval::dates(a.min(b), a.max(b)).with_window(time(rng), time(rng))
        }
    }
}

pub fn random_timestamp(rng: &mut ChaCha8Rng) -> NaiveDateTime {
    at(2019, rng.random_range(1..=12), rng.random_range(1..=28), rng.random_range(0..24), [0, 15, 30, 45][rng.random_range(0..4)])
}

fn keywords(taxonomy: &SemanticTaxonomy) -> Vec<String> {
    taxonomy.ids().map(|k| taxonomy.keyword(k).to_owned()).collect()
}

/// Half exact, half semantic. Exact policies sit at street level most of
/// the time and at city, state or nation level otherwise; some drop their
/// point.
pub fn random_policies(rng: &mut ChaCha8Rng, n: usize, taxonomy: &SemanticTaxonomy, first_pid: u64) -> Vec<LampiPolicy> {
    let kws = keywords(taxonomy);
    let owners = (n / 3).max(2);
    (0..n)
        .map(|i| {
            let pid = first_pid + i as u64;
            let owner = format!("u{}", rng.random_range(0..owners));
            let int = random_interval(rng);
            let xi = if rng.random_bool(0.5) { Sensitiveness::High } else { Sensitiveness::Low };
            if rng.random_bool(0.5) {
                let full = grid_address(rng);
                let mut address = match rng.random_range(0..10) {
                    0 => full.prefix(1),
                    1 => full.prefix(2),
                    2 => full.prefix(3),
                    _ => full.clone(),
                };
                if address.depth() == 4 && rng.random_bool(0.8) {
                    address = address.with_point(full.point().unwrap());
                }
                LampiPolicy::exact(pid, &owner, address, int, xi)
            } else {
                LampiPolicy::semantic(pid, &owner, kws.choose(rng).unwrap(), int, xi)
            }
        })
        .collect()
}

/// A probe mixing address-only, point-only, keyword-only and combined
/// locations, with the odd keyword unknown to the taxonomy.
pub fn random_probe(rng: &mut ChaCha8Rng, taxonomy: &SemanticTaxonomy) -> PhotoLocation {
    let kws = keywords(taxonomy);
    let mut loc = PhotoLocation::at(random_timestamp(rng));
    let full = grid_address(rng);
    match rng.random_range(0..4) {
        0 => loc.address = Some(ExactAddress::new(full.street(), full.city(), full.state(), full.nation())),
        1 => {
            let p = full.point().unwrap();
            let jitter = if rng.random_bool(0.5) { 0.0003 } else { 0.002 };
            loc.point = GeoPoint::new(p.lat + jitter, p.lon);
        }
        2 => {}
        _ => {
            loc.address = Some(ExactAddress::new(full.street(), full.city(), full.state(), full.nation()));
            loc.point = full.point();
        }
    }
    let n_kw = if loc.address.is_none() && loc.point.is_none() { rng.random_range(1..=5) } else { rng.random_range(0..=5) };
    for _ in 0..n_kw {
        if rng.random_bool(0.05) {
            loc = loc.with_keyword("not a place");
        } else {
            loc = loc.with_keyword(kws.choose(rng).unwrap());
        }
    }
    loc
}
