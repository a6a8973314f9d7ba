use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::embedding::{ensure_unit, Embedding, EmbeddingBackend, EmbeddingProvider};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    provider: String,
    text: String,
    vector: Vec<f64>,
}

/// Embedding cache keyed by `(provider id, text)`, optionally persisted as
/// line-delimited JSON.
///
/// Misses go to the wrapped provider; without one, a miss is an
/// embedding-unavailable error. One writer appends to the file while any
/// number of readers hit the in-memory map.
pub struct CachedEmbedder {
    provider_id: String,
    dim: usize,
    inner: Option<Arc<dyn EmbeddingProvider>>,
    entries: RwLock<HashMap<String, Embedding>>,
    writer: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl CachedEmbedder {
    /// Opens (or creates) a cache file for `inner`'s provider id.
    pub fn with_provider(path: Option<&Path>, inner: Arc<dyn EmbeddingProvider>) -> Result<Self> {
        let id = inner.id().to_string();
        let dim = inner.dimension();
        Self::build(path, id, Some(dim), Some(inner))
    }

    /// Opens a cache file for replay only; every miss is an error.
    pub fn replay(path: &Path, provider_id: &str) -> Result<Self> {
        Self::build(Some(path), provider_id.to_string(), None, None)
    }

    fn build(
        path: Option<&Path>,
        provider_id: String,
        dim: Option<usize>,
        inner: Option<Arc<dyn EmbeddingProvider>>,
    ) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut dim = dim;
        if let Some(path) = path.filter(|p| p.exists()) {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = match serde_json::from_str(&line) {
                    Ok(r) => r,
                    Err(e) => {
                        warn!("{}:{}: skipping bad cache line: {e}", path.display(), lineno + 1);
                        continue;
                    }
                };
                if rec.provider != provider_id {
                    continue;
                }
                let d = *dim.get_or_insert(rec.vector.len());
                let mut v = rec.vector;
                if v.len() != d || !ensure_unit(&mut v) {
                    warn!("{}:{}: skipping malformed vector", path.display(), lineno + 1);
                    continue;
                }
                entries.entry(rec.text).or_insert_with(|| v.into());
            }
        }
        let writer = match path {
            Some(p) => {
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| Error::io(p, e))?;
                Some(Mutex::new(BufWriter::new(f)))
            }
            None => None,
        };
        Ok(CachedEmbedder {
            provider_id,
            dim: dim.unwrap_or(0),
            inner,
            entries: RwLock::new(entries),
            writer,
            path: path.map(Path::to_path_buf),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn store(&self, text: &str, v: &Embedding) {
        let mut map = self.entries.write();
        if map.contains_key(text) {
            return;
        }
        map.insert(text.to_string(), v.clone());
        drop(map);
        if let Some(w) = &self.writer {
            let rec = CacheRecord {
                provider: self.provider_id.clone(),
                text: text.to_string(),
                vector: v.to_vec(),
            };
            let mut w = w.lock();
            let line = serde_json::to_string(&rec).expect("cache record serializes");
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                warn!("embedding cache write failed: {e}");
            }
        }
    }

    fn miss(&self, text: &str) -> Error {
        Error::EmbeddingUnavailable {
            text: text.to_string(),
            message: format!("no cached vector for provider {}", self.provider_id),
        }
    }
}

impl EmbeddingProvider for CachedEmbedder {
    fn id(&self) -> &str {
        &self.provider_id
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn backend(&self) -> EmbeddingBackend {
        EmbeddingBackend::FileCache
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        if let Some(v) = self.entries.read().get(text) {
            return Ok(v.clone());
        }
        let inner = self.inner.as_ref().ok_or_else(|| self.miss(text))?;
        let v = inner.embed(text)?;
        self.store(text, &v);
        Ok(v)
    }

    fn embed_batch(&self, texts: &[&str]) -> Vec<Result<Embedding>> {
        let mut out: Vec<Option<Result<Embedding>>> = {
            let map = self.entries.read();
            texts.iter().map(|t| map.get(*t).cloned().map(Ok)).collect()
        };
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            match &self.inner {
                None => {
                    for &i in &missing {
                        out[i] = Some(Err(self.miss(texts[i])));
                    }
                }
                Some(inner) => {
                    let batch: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
                    for (&i, r) in missing.iter().zip(inner.embed_batch(&batch)) {
                        if let Ok(v) = &r {
                            self.store(texts[i], v);
                        }
                        out[i] = Some(r);
                    }
                }
            }
        }
        out.into_iter().map(|r| r.expect("filled")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::HashedTrigramEmbedder;

    #[test]
    fn persists_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let inner = Arc::new(HashedTrigramEmbedder::new(32, 3));
        let id = inner.id().to_string();
        let live = CachedEmbedder::with_provider(Some(&path), inner.clone()).unwrap();
        let a = live.embed("orbit").unwrap();
        let batch = live.embed_batch(&["orbit", "spin around"]);
        assert_eq!(batch.len(), 2);
        drop(live);

        let replay = CachedEmbedder::replay(&path, &id).unwrap();
        assert_eq!(replay.len(), 2);
        assert_eq!(replay.dimension(), 32);
        let b = replay.embed("orbit").unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(matches!(
            replay.embed("unseen"),
            Err(Error::EmbeddingUnavailable { .. })
        ));
        let other = CachedEmbedder::replay(&path, "someone-else").unwrap();
        assert!(other.is_empty());
    }
}
