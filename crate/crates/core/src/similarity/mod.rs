//! Relation-phrase embeddings, cosine similarity and the n-gram stoplist.

mod cache;
mod embedding;
mod remote;
mod stoplist;

pub use cache::CachedEmbedder;
pub use embedding::{
    cosine, Embedding, EmbeddingBackend, EmbeddingProvider, HashedTrigramEmbedder,
    DEFAULT_DIMENSION, DEFAULT_SEED,
};
pub use remote::RemoteEmbedder;
pub use stoplist::Stoplist;

use crate::error::Result;
use crate::model::normalize_phrase;

/// Thresholded, stoplist-filtered similarity of two relation phrases.
///
/// Returns 0 when either phrase is stoplisted or when the (non-negative)
/// cosine falls below `threshold`.
pub fn phrase_similarity(
    a: &str,
    b: &str,
    provider: &dyn EmbeddingProvider,
    stoplist: &Stoplist,
    threshold: f64,
) -> Result<f64> {
    let (a, b) = (normalize_phrase(a), normalize_phrase(b));
    if stoplist.contains(&a) || stoplist.contains(&b) || a == b {
        return Ok(similarity_of(&a, &b, &[], &[], stoplist, threshold));
    }
    let va = provider.embed(&a)?;
    let vb = provider.embed(&b)?;
    Ok(similarity_of(&a, &b, &va, &vb, stoplist, threshold))
}

/// [`phrase_similarity`] for already normalized phrases and their vectors.
pub(crate) fn similarity_of(
    a: &str,
    b: &str,
    va: &[f64],
    vb: &[f64],
    stoplist: &Stoplist,
    threshold: f64,
) -> f64 {
    if stoplist.contains(a) || stoplist.contains(b) {
        return 0.0;
    }
    if a == b {
        return if 1.0 < threshold { 0.0 } else { 1.0 };
    }
    threshold_cosine(cosine(va, vb), threshold)
}

/// Clamps a raw cosine into `[0, 1]` and zeroes it below `threshold`.
pub fn threshold_cosine(cos: f64, threshold: f64) -> f64 {
    let c = cos.clamp(0.0, 1.0);
    if c < threshold {
        0.0
    } else {
        c
    }
}
