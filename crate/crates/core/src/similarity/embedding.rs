use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::normalize_text;

/// A unit-norm embedding vector.
pub type Embedding = Arc<[f64]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingBackend {
    DeterministicLocal,
    RemoteService,
    FileCache,
}

/// Maps a phrase to a unit vector of fixed dimension.
///
/// Implementations must be pure: the same text always yields the same
/// vector for a given provider, and concurrent calls are allowed.
pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn backend(&self) -> EmbeddingBackend;
    fn embed(&self, text: &str) -> Result<Embedding>;

    fn embed_batch(&self, texts: &[&str]) -> Vec<Result<Embedding>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Dot product of two equal-length vectors, summed in index order.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales `v` to unit length unless it already is (within 1e-12), so
/// stored unit vectors survive a round trip bit-for-bit.
pub(crate) fn ensure_unit(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    if (norm - 1.0).abs() > 1e-12 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    true
}

pub(crate) fn normalize_in_place(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

pub const DEFAULT_DIMENSION: usize = 1024;
pub const DEFAULT_SEED: u64 = 0x5eed_a1a1_0000_0001;

/// Offline embedder built from hashed character trigrams.
///
/// The text is normalized (lowercase, single spaces) and padded with one
/// space on each side. Every character trigram of the padded text is hashed
/// with 64-bit FNV-1a, starting from the offset basis, over the seed's 8
/// little-endian bytes followed by the trigram's UTF-8 bytes. The hash picks
/// bucket `h % dim` and a sign (`-1` when bit 32 is set, else `+1`); the
/// signed counts are L2-normalized. If every count cancels, bucket
/// `fnv(text) % dim` is set to 1.
#[derive(Debug, Clone)]
pub struct HashedTrigramEmbedder {
    id: String,
    dim: usize,
    seed: u64,
}

impl HashedTrigramEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedTrigramEmbedder {
            id: format!("trigram-{dim}-{seed:016x}"),
            dim,
            seed,
        }
    }

    fn hash(&self, bytes: &[u8]) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for b in self.seed.to_le_bytes().iter().chain(bytes) {
            h ^= *b as u64;
            h = h.wrapping_mul(PRIME);
        }
        h
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let normalized = normalize_text(text);
        let padded: Vec<char> = format!(" {normalized} ").chars().collect();
        let mut v = vec![0.0; self.dim];
        let mut buf = String::with_capacity(12);
        for w in padded.windows(3) {
            buf.clear();
            buf.extend(w);
            let h = self.hash(buf.as_bytes());
            let sign = if (h >> 32) & 1 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        if !normalize_in_place(&mut v) {
            let h = self.hash(normalized.as_bytes());
            v[(h % self.dim as u64) as usize] = 1.0;
        }
        v
    }
}

impl Default for HashedTrigramEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION, DEFAULT_SEED)
    }
}

impl EmbeddingProvider for HashedTrigramEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn backend(&self) -> EmbeddingBackend {
        EmbeddingBackend::DeterministicLocal
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        Ok(self.vector(text).into())
    }
}
