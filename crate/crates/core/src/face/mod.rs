//! Face vectors, Euclidean matching, and sensitiveness-derived tolerances.

mod embed;
mod matcher;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{Sensitiveness, UserId};

pub use embed::{EmbeddingProvider, SeededEmbedder};
pub use matcher::{Candidate, Match, MatchOutcome, Matcher, PhotoFace};

pub const FACE_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FaceError {
    #[error("face vector has {got} components, expected {FACE_DIM}")]
    DimensionMismatch { got: usize },
    #[error("face vector component {index} is not finite")]
    NonFinite { index: usize },
    #[error("tolerances must satisfy 0 <= low < high, got low={low} high={high}")]
    BadTolerances { low: f64, high: f64 },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("embedding input: {0}")]
    Input(String),
}

impl FaceError {
    pub fn code(&self) -> &'static str {
        match self {
            FaceError::DimensionMismatch { .. } => "DimensionMismatch",
            FaceError::NonFinite { .. } => "NonFiniteVector",
            FaceError::BadTolerances { .. } => "BadTolerances",
            FaceError::Pool(_) => "WorkerPool",
            FaceError::Input(_) => "BadEmbeddingInput",
        }
    }
}

/// A 128-dimensional face descriptor with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FaceVector(Box<[f64; FACE_DIM]>);

impl FaceVector {
    pub fn new(values: &[f64]) -> Result<Self, FaceError> {
        let arr: [f64; FACE_DIM] = values.try_into().map_err(|_| FaceError::DimensionMismatch { got: values.len() })?;
        if let Some(index) = arr.iter().position(|x| !x.is_finite()) {
            return Err(FaceError::NonFinite { index });
        }
        Ok(FaceVector(Box::new(arr)))
    }

    /// Unit vector along axis `i`.
    pub fn basis(i: usize) -> Self {
        let mut arr = [0.0; FACE_DIM];
        arr[i] = 1.0;
        FaceVector(Box::new(arr))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0[..]
    }
}

impl TryFrom<Vec<f64>> for FaceVector {
    type Error = FaceError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        FaceVector::new(&v)
    }
}

impl From<FaceVector> for Vec<f64> {
    fn from(v: FaceVector) -> Self {
        v.0.to_vec()
    }
}

/// Euclidean distance between two face vectors.
pub fn distance(a: &FaceVector, b: &FaceVector) -> f64 {
    // Four partial sums let the compiler vectorize the loop.
    let mut acc = [0.0f64; 4];
    for (x, y) in a.0.chunks_exact(4).zip(b.0.chunks_exact(4)) {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Tolerance {
    pub max_distance: f64,
}

/// Faces closer than the tolerance match; a distance equal to it does not.
pub fn compare(source: &FaceVector, dest: &FaceVector, tol: Tolerance) -> bool {
    distance(source, dest) < tol.max_distance
}

pub const DEFAULT_TOLERANCE_LOW: f64 = 0.6;
pub const DEFAULT_TOLERANCE_HIGH: f64 = 0.9;

/// Distance tolerance per sensitiveness level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub low: f64,
    pub high: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { low: DEFAULT_TOLERANCE_LOW, high: DEFAULT_TOLERANCE_HIGH }
    }
}

impl ToleranceConfig {
    pub fn new(low: f64, high: f64) -> Result<Self, FaceError> {
        if low.is_finite() && high.is_finite() && 0.0 <= low && low < high {
            Ok(ToleranceConfig { low, high })
        } else {
            Err(FaceError::BadTolerances { low, high })
        }
    }

    pub fn for_xi(&self, xi: Sensitiveness) -> Tolerance {
        match xi {
            Sensitiveness::Low => Tolerance { max_distance: self.low },
            Sensitiveness::High => Tolerance { max_distance: self.high },
        }
    }
}

/// Default tolerance for a sensitiveness level.
pub fn tolerance_for(xi: Sensitiveness) -> Tolerance {
    ToleranceConfig::default().for_xi(xi)
}

/// One enrolled user and their reference face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub user: UserId,
    pub vector: FaceVector,
}
