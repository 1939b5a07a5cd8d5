//! Brute-force references, written without the engine's matching code.

use std::collections::{BTreeMap, HashMap};

use lamp_core::dlp::naive_scan;
use lamp_core::enforce::PhotoManifest;
use lamp_core::face::{FaceVector, ToleranceConfig};
use lamp_core::policy::{LampiPolicy, PolicyId, Sensitiveness, UserId};
use lamp_core::taxonomy::SemanticTaxonomy;

/// Plain Euclidean distance, summed left to right.
pub fn straight_distance(a: &FaceVector, b: &FaceVector) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn tolerance(t: &ToleranceConfig, xi: Sensitiveness) -> f64 {
    match xi {
        Sensitiveness::Low => t.low,
        Sensitiveness::High => t.high,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub face_index: u32,
    pub user: UserId,
    pub pid: PolicyId,
    pub distance: f64,
}

/// Every applicable policy, tested one at a time against every face. For
/// each (face, owner) the firing policy with the lowest tolerance wins,
/// ties to the lowest pid.
pub fn brute_force_check(
    m: &PhotoManifest,
    policies: &[LampiPolicy],
    taxonomy: &SemanticTaxonomy,
    faces: &HashMap<UserId, FaceVector>,
    tolerances: &ToleranceConfig,
    epsilon: f64,
) -> (Vec<PolicyId>, Vec<Verdict>) {
    let applicable = naive_scan(policies, taxonomy, &m.location, epsilon);
    let by_pid: HashMap<PolicyId, &LampiPolicy> = policies.iter().map(|p| (p.pid, p)).collect();
    let mut best: BTreeMap<(u32, UserId), (f64, PolicyId, f64)> = BTreeMap::new();
    for pid in &applicable {
        let p = by_pid[pid];
        let Some(enrolled) = faces.get(&p.owner) else { continue };
        let tol = tolerance(tolerances, p.xi);
        for face in &m.faces {
            let d = straight_distance(&face.vector, enrolled);
            if d < tol {
                let key = (face.index, p.owner.clone());
                let better = match best.get(&key) {
                    None => true,
                    Some(&(t, q, _)) => tol < t || (tol == t && p.pid < q),
                };
                if better {
                    best.insert(key, (tol, p.pid, d));
                }
            }
        }
    }
    let verdicts = best.into_iter().map(|((face_index, user), (_, pid, distance))| Verdict { face_index, user, pid, distance }).collect();
    (applicable, verdicts)
}

/// Smallest gap between any (face, applicable owner) distance and either tolerance.
pub fn threshold_margin(
    m: &PhotoManifest,
    applicable: &[PolicyId],
    policies: &[LampiPolicy],
    faces: &HashMap<UserId, FaceVector>,
    tolerances: &ToleranceConfig,
) -> f64 {
    let by_pid: HashMap<PolicyId, &LampiPolicy> = policies.iter().map(|p| (p.pid, p)).collect();
    let mut margin = f64::INFINITY;
    for pid in applicable {
        if let Some(v) = faces.get(&by_pid[pid].owner) {
            for f in &m.faces {
                let d = straight_distance(&f.vector, v);
                margin = margin.min((d - tolerances.low).abs()).min((d - tolerances.high).abs());
            }
        }
    }
    margin
}
