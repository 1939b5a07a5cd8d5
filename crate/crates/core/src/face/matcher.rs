//! Exhaustive matching of photo faces against candidate records.

use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::policy::{Sensitiveness, UserId};

use super::{distance, FaceError, FaceVector, ToleranceConfig};

/// A face found in an uploaded photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoFace {
    pub index: u32,
    pub vector: FaceVector,
}

/// An enrolled record to test against, with the sensitiveness that sets its tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub user: &'a UserId,
    pub vector: &'a FaceVector,
    pub xi: Sensitiveness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub face_index: u32,
    pub user: UserId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Sorted by face index, then user.
    pub matches: Vec<Match>,
    pub comparisons: usize,
}

/// Pairs per rayon task; small enough to spread 18 x 100 over a few workers.
const MIN_PAIRS_PER_TASK: usize = 64;

#[derive(Clone)]
pub struct Matcher {
    tolerances: ToleranceConfig,
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for Matcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Matcher").field("tolerances", &self.tolerances).field("workers", &self.workers()).finish()
    }
}

impl Matcher {
    /// A matcher backed by its own pool; `workers == 0` uses one per CPU.
    pub fn new(tolerances: ToleranceConfig, workers: usize) -> Result<Self, FaceError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("lamp-match-{i}"))
            .build()
            .map_err(|e| FaceError::Pool(e.to_string()))?;
        Ok(Matcher { tolerances, pool: Some(Arc::new(pool)) })
    }

    /// A matcher that always runs on the calling thread.
    pub fn sequential(tolerances: ToleranceConfig) -> Self {
        Matcher { tolerances, pool: None }
    }

    pub fn tolerances(&self) -> &ToleranceConfig {
        &self.tolerances
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Every (face, candidate) pair whose distance is under the candidate's tolerance.
    pub fn match_candidates(&self, faces: &[PhotoFace], candidates: &[Candidate<'_>]) -> MatchOutcome {
        match &self.pool {
            Some(pool) => self.run_parallel(pool, faces, candidates),
            None => self.match_sequential(faces, candidates),
        }
    }

    /// Plain double loop on the calling thread.
    pub fn match_sequential(&self, faces: &[PhotoFace], candidates: &[Candidate<'_>]) -> MatchOutcome {
        let mut matches = Vec::new();
        let mut comparisons = 0;
        for face in faces {
            for c in candidates {
                comparisons += 1;
                if let Some(m) = self.test_pair(face, c) {
                    matches.push(m);
                }
            }
        }
        sort_matches(&mut matches);
        MatchOutcome { matches, comparisons }
    }

    /// Fan pairs out over the pool, or over the global rayon pool for a
    /// sequential matcher.
    pub fn match_parallel(&self, faces: &[PhotoFace], candidates: &[Candidate<'_>]) -> MatchOutcome {
        match &self.pool {
            Some(pool) => self.run_parallel(pool, faces, candidates),
            None => self.parallel_body(faces, candidates),
        }
    }

    fn run_parallel(&self, pool: &ThreadPool, faces: &[PhotoFace], candidates: &[Candidate<'_>]) -> MatchOutcome {
        pool.install(|| self.parallel_body(faces, candidates))
    }

    fn parallel_body(&self, faces: &[PhotoFace], candidates: &[Candidate<'_>]) -> MatchOutcome {
        let nc = candidates.len();
        let total = faces.len() * nc;
        if total == 0 {
            return MatchOutcome { matches: Vec::new(), comparisons: 0 };
        }
        let (mut matches, comparisons) = (0..total)
            .into_par_iter()
            .with_min_len(MIN_PAIRS_PER_TASK)
            .fold(
                || (Vec::new(), 0usize),
                |(mut acc, n), k| {
                    if let Some(m) = self.test_pair(&faces[k / nc], &candidates[k % nc]) {
                        acc.push(m);
                    }
                    (acc, n + 1)
                },
            )
            .reduce(
                || (Vec::new(), 0),
                |(mut a, na), (b, nb)| {
                    a.extend(b);
                    (a, na + nb)
                },
            );
        sort_matches(&mut matches);
        MatchOutcome { matches, comparisons }
    }

    fn test_pair(&self, face: &PhotoFace, c: &Candidate<'_>) -> Option<Match> {
        let d = distance(&face.vector, c.vector);
        (d < self.tolerances.for_xi(c.xi).max_distance).then(|| Match { face_index: face.index, user: c.user.clone(), distance: d })
    }
}

fn sort_matches(matches: &mut [Match]) {
    matches
        .sort_by(|a, b| a.face_index.cmp(&b.face_index).then_with(|| a.user.cmp(&b.user)).then_with(|| a.distance.total_cmp(&b.distance)));
}
