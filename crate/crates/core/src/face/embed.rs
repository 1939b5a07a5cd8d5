//! Embedding providers. Real detection and encoding live outside this
//! crate; [`SeededEmbedder`] stands in for them with deterministic vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::{FaceError, FaceVector, PhotoFace, FACE_DIM};

pub trait EmbeddingProvider: Send + Sync {
    /// Encode one face image (or an opaque token standing in for one).
    fn encode(&self, input: &[u8]) -> Result<FaceVector, FaceError>;

    /// Find and encode every face in a photo.
    fn detect(&self, photo: &[u8]) -> Result<Vec<PhotoFace>, FaceError>;
}

/// Maps text tokens to pseudo-random unit vectors.
///
/// * `alice` is a unit vector seeded by the token's hash.
/// * `alice~0.75` is `alice` moved by exactly 0.75 in a direction seeded by
///   the whole token, so distances between related faces can be dialed in.
///
/// `detect` reads a comma-separated list of such tokens, one per face.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeededEmbedder;

fn unit_from_seed(seed: &str) -> [f64; FACE_DIM] {
    let digest: [u8; 32] = Sha256::digest(seed.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    let mut v = [0.0f64; FACE_DIM];
    for x in v.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

impl SeededEmbedder {
    /// Unit vector for an identity token.
    pub fn identity(&self, token: &str) -> FaceVector {
        FaceVector::new(&unit_from_seed(token)).expect("normalized gaussian draw is finite")
    }

    /// `base` displaced by `delta` along a direction seeded by `salt`.
    pub fn perturb(&self, base: &FaceVector, delta: f64, salt: &str) -> FaceVector {
        let dir = unit_from_seed(&format!("direction:{salt}"));
        let v: Vec<f64> = base.as_slice().iter().zip(dir).map(|(b, u)| b + delta * u).collect();
        FaceVector::new(&v).expect("finite displacement")
    }

    pub fn vector_for(&self, token: &str) -> Result<FaceVector, FaceError> {
        let token = token.trim();
        if token.is_empty() {
            return Err(FaceError::Input("empty face token".into()));
        }
        match token.split_once('~') {
            None => Ok(self.identity(token)),
            Some((base, delta)) => {
                let delta: f64 = delta
                    .trim()
                    .parse()
                    .ok()
                    .filter(|d: &f64| d.is_finite() && *d >= 0.0)
                    .ok_or_else(|| FaceError::Input(format!("bad distance in {token:?}")))?;
                Ok(self.perturb(&self.identity(base.trim()), delta, token))
            }
        }
    }
}

impl EmbeddingProvider for SeededEmbedder {
    fn encode(&self, input: &[u8]) -> Result<FaceVector, FaceError> {
        let token = std::str::from_utf8(input).map_err(|e| FaceError::Input(e.to_string()))?;
        self.vector_for(token)
    }

    fn detect(&self, photo: &[u8]) -> Result<Vec<PhotoFace>, FaceError> {
        let text = std::str::from_utf8(photo).map_err(|e| FaceError::Input(e.to_string()))?;
        text.split(',')
            .filter(|t| !t.trim().is_empty())
            .enumerate()
            .map(|(i, t)| Ok(PhotoFace { index: i as u32, vector: self.vector_for(t)? }))
            .collect()
    }
}
