//! HTTP client for an embedding sidecar.
//!
//! Protocol: `GET /health` answers `{"model": id, "dim": d}` (503 while the
//! model loads); `POST /embed` takes `{"texts": [...]}` and answers
//! `{"model": id, "dim": d, "vectors": [[...], ...]}` in request order.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::embedding::{ensure_unit, Embedding, EmbeddingBackend, EmbeddingProvider};
use crate::error::{Error, Result};

/// Largest batch the sidecar accepts.
pub const MAX_BATCH: usize = 256;
/// Longest text the sidecar accepts, in characters.
pub const MAX_TEXT_CHARS: usize = 512;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub model: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    base_url: String,
    client: Client,
    id: String,
    model: String,
    dim: usize,
}

impl RemoteEmbedder {
    /// Queries `/health` and pins the model id and dimension it reports.
    pub fn connect(base_url: &str) -> Result<Self> {
        let base_url = base_url.trim_end_matches('/').to_string();
        let client = Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        let unavailable = |message: String| Error::EmbeddingUnavailable {
            text: String::new(),
            message,
        };
        let resp = client
            .get(format!("{base_url}/health"))
            .send()
            .map_err(|e| unavailable(format!("{base_url}/health: {e}")))?;
        if resp.status() != StatusCode::OK {
            return Err(unavailable(format!(
                "{base_url}/health answered {}",
                resp.status()
            )));
        }
        let health: HealthResponse = resp
            .json()
            .map_err(|e| unavailable(format!("bad /health body: {e}")))?;
        if health.dim == 0 {
            return Err(unavailable("service reports dimension 0".into()));
        }
        Ok(RemoteEmbedder {
            id: format!("remote:{}", health.model),
            model: health.model,
            dim: health.dim,
            base_url,
            client,
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Embeds up to [`MAX_BATCH`] texts with one request.
    pub fn embed_texts(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        let first = texts.first().copied().unwrap_or_default().to_string();
        let unavailable = |message: String| Error::EmbeddingUnavailable {
            text: first.clone(),
            message,
        };
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        if texts.len() > MAX_BATCH {
            return Err(Error::Input(format!(
                "embedding batch of {} exceeds {MAX_BATCH}",
                texts.len()
            )));
        }
        let body = EmbedRequest {
            texts: texts
                .iter()
                .map(|t| t.chars().take(MAX_TEXT_CHARS).collect())
                .collect(),
        };
        let resp = self
            .client
            .post(format!("{}/embed", self.base_url))
            .json(&body)
            .send()
            .map_err(|e| unavailable(e.to_string()))?;
        match resp.status() {
            StatusCode::OK => {}
            StatusCode::PAYLOAD_TOO_LARGE => {
                return Err(Error::Input("embedding batch rejected as too large".into()))
            }
            other => return Err(unavailable(format!("/embed answered {other}"))),
        }
        let parsed: EmbedResponse = resp
            .json()
            .map_err(|e| unavailable(format!("bad /embed body: {e}")))?;
        if parsed.model != self.model {
            return Err(unavailable(format!(
                "model changed from {} to {}",
                self.model, parsed.model
            )));
        }
        if parsed.vectors.len() != texts.len() {
            return Err(unavailable(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                parsed.vectors.len()
            )));
        }
        parsed
            .vectors
            .into_iter()
            .map(|mut v| {
                if v.len() != self.dim {
                    return Err(unavailable(format!(
                        "vector of length {} from a {}-dimensional model",
                        v.len(),
                        self.dim
                    )));
                }
                if !ensure_unit(&mut v) {
                    return Err(unavailable("zero vector".into()));
                }
                Ok(v.into())
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn backend(&self) -> EmbeddingBackend {
        EmbeddingBackend::RemoteService
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        self.embed_texts(&[text]).map(|mut v| v.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Vec<Result<Embedding>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(MAX_BATCH) {
            match self.embed_texts(chunk) {
                Ok(vs) => out.extend(vs.into_iter().map(Ok)),
                Err(e) => {
                    let msg = e.to_string();
                    out.extend(chunk.iter().map(|t| {
                        Err(Error::EmbeddingUnavailable {
                            text: t.to_string(),
                            message: msg.clone(),
                        })
                    }));
                }
            }
        }
        out
    }
}
