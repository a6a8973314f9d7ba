use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::autocomplete::{
    autocomplete_entities, autocomplete_harvest, Backoff, HttpSuggestClient, SuggestClient,
};
use super::generative::{
    generative_relations, CompletionClient, HttpCompletionClient, PromptTemplate,
    DEFAULT_MAX_LINES,
};
use super::snapshot::QueryDirection;
use super::triple_store::TripleStore;
use crate::error::{Error, Result};
use crate::model::{Entity, RelationPhrase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    LocalKb,
    TripleLookup,
    ConceptGraphApi,
    Autocomplete,
    GenerativeLm,
}

impl SourceKind {
    /// Kinds that can answer `(anchor, relation, ?)` queries by default.
    pub fn suggests_entities(self) -> bool {
        matches!(
            self,
            SourceKind::LocalKb | SourceKind::TripleLookup | SourceKind::Autocomplete
        )
    }
}

/// What a backend found for a directed pair. Backends that answer both
/// directions from one query fill `reverse`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairAnswer {
    pub forward: Vec<RelationPhrase>,
    pub reverse: Option<Vec<RelationPhrase>>,
}

/// Live side of a relation source.
pub trait SourceBackend: Send + Sync {
    fn relations(&self, head: &Entity, tail: &Entity, source: &str) -> Result<PairAnswer>;

    fn entities(
        &self,
        _anchor: &Entity,
        _relation: &str,
        _direction: QueryDirection,
        _source: &str,
    ) -> Result<Vec<String>> {
        Ok(Vec::new())
    }

    /// Whether queries leave the machine. Network backends are skipped in
    /// offline mode.
    fn is_network(&self) -> bool;
}

pub struct TripleBackend(pub TripleStore);

impl SourceBackend for TripleBackend {
    fn relations(&self, head: &Entity, tail: &Entity, source: &str) -> Result<PairAnswer> {
        Ok(PairAnswer {
            forward: self.0.lookup(head, tail, source),
            reverse: None,
        })
    }

    fn entities(
        &self,
        anchor: &Entity,
        relation: &str,
        direction: QueryDirection,
        _source: &str,
    ) -> Result<Vec<String>> {
        Ok(match direction {
            QueryDirection::Forward => self.0.objects(anchor, relation),
            QueryDirection::Backward => self.0.subjects(anchor, relation),
        })
    }

    fn is_network(&self) -> bool {
        false
    }
}

pub struct AutocompleteBackend {
    pub client: Box<dyn SuggestClient>,
    pub backoff: Backoff,
}

impl SourceBackend for AutocompleteBackend {
    fn relations(&self, head: &Entity, tail: &Entity, source: &str) -> Result<PairAnswer> {
        Ok(PairAnswer {
            forward: autocomplete_harvest(head, tail, self.client.as_ref(), self.backoff, source)?,
            reverse: None,
        })
    }

    fn entities(
        &self,
        anchor: &Entity,
        relation: &str,
        direction: QueryDirection,
        source: &str,
    ) -> Result<Vec<String>> {
        match direction {
            QueryDirection::Forward => {
                autocomplete_entities(anchor, relation, self.client.as_ref(), self.backoff, source)
            }
            QueryDirection::Backward => Ok(Vec::new()),
        }
    }

    fn is_network(&self) -> bool {
        true
    }
}

pub struct GenerativeBackend {
    pub client: Box<dyn CompletionClient>,
    pub template: PromptTemplate,
    pub max_lines: usize,
}

impl SourceBackend for GenerativeBackend {
    fn relations(&self, head: &Entity, tail: &Entity, source: &str) -> Result<PairAnswer> {
        let a = generative_relations(
            head,
            tail,
            self.client.as_ref(),
            &self.template,
            self.max_lines,
            source,
        )?;
        Ok(PairAnswer {
            forward: a.forward,
            reverse: Some(a.backward),
        })
    }

    fn is_network(&self) -> bool {
        true
    }
}

/// A named, configured relation source. Without a backend the source can
/// only answer from the snapshot.
#[derive(Clone)]
pub struct RelationSource {
    pub id: String,
    pub kind: SourceKind,
    pub config: BTreeMap<String, String>,
    backend: Option<Arc<dyn SourceBackend>>,
}

impl fmt::Debug for RelationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelationSource")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("config", &self.config)
            .field("backend", &self.backend.is_some())
            .finish()
    }
}

/// Default number of phrases kept per source and directed pair.
pub const DEFAULT_RESULT_CAP: usize = 50;

impl RelationSource {
    pub fn snapshot_only(id: &str, kind: SourceKind) -> Self {
        RelationSource {
            id: id.to_string(),
            kind,
            config: BTreeMap::new(),
            backend: None,
        }
    }

    pub fn with_backend(id: &str, kind: SourceKind, backend: Arc<dyn SourceBackend>) -> Self {
        RelationSource {
            backend: Some(backend),
            ..Self::snapshot_only(id, kind)
        }
    }

    /// Builds the backend described by `config`. Relative paths resolve
    /// against `base_dir`.
    ///
    /// Keys: `path` (triple kinds), `endpoint` and `param` (autocomplete),
    /// `endpoint`, `model`, `api_key_env`, `prompt_template`, `max_lines`
    /// (generative), plus `max_results`, `suggest` and `retries` for any kind.
    pub fn from_config(
        id: &str,
        kind: SourceKind,
        config: BTreeMap<String, String>,
        base_dir: &Path,
    ) -> Result<Self> {
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let need = |key: &str| -> Result<&String> {
            config
                .get(key)
                .ok_or_else(|| Error::Config(format!("source {id}: missing `{key}`")))
        };
        let backend: Option<Arc<dyn SourceBackend>> = match kind {
            SourceKind::LocalKb => match config.get("path") {
                Some(p) => Some(Arc::new(TripleBackend(TripleStore::open_with(
                    &resolve(p),
                    false,
                    false,
                )?))),
                None => None,
            },
            SourceKind::TripleLookup => match config.get("path") {
                Some(p) => Some(Arc::new(TripleBackend(TripleStore::open(&resolve(p))?))),
                None => None,
            },
            SourceKind::ConceptGraphApi => match config.get("path") {
                Some(p) => Some(Arc::new(TripleBackend(TripleStore::open_edge_dump(
                    &resolve(p),
                )?))),
                None => None,
            },
            SourceKind::Autocomplete => match config.get("endpoint") {
                Some(endpoint) => {
                    let param = config.get("param").map(String::as_str).unwrap_or("q");
                    let retries = parse_key(&config, id, "retries")?.unwrap_or(3);
                    Some(Arc::new(AutocompleteBackend {
                        client: Box::new(HttpSuggestClient::new(endpoint, param)?),
                        backoff: Backoff {
                            retries,
                            initial: Duration::from_millis(500),
                        },
                    }))
                }
                None => None,
            },
            SourceKind::GenerativeLm => match config.get("endpoint") {
                Some(endpoint) => {
                    let model = need("model")?;
                    let api_key = config
                        .get("api_key_env")
                        .and_then(|var| std::env::var(var).ok());
                    let template = match config.get("prompt_template") {
                        Some(p) => PromptTemplate::load(&resolve(p))?,
                        None => PromptTemplate::default(),
                    };
                    Some(Arc::new(GenerativeBackend {
                        client: Box::new(HttpCompletionClient::new(endpoint, model, api_key)?),
                        template,
                        max_lines: parse_key(&config, id, "max_lines")?.unwrap_or(DEFAULT_MAX_LINES),
                    }))
                }
                None => None,
            },
        };
        parse_key::<usize>(&config, id, "max_results")?;
        parse_key::<bool>(&config, id, "suggest")?;
        Ok(RelationSource {
            id: id.to_string(),
            kind,
            config,
            backend,
        })
    }

    pub fn backend(&self) -> Option<&dyn SourceBackend> {
        self.backend.as_deref()
    }

    pub fn result_cap(&self) -> usize {
        self.config
            .get("max_results")
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_RESULT_CAP)
    }

    /// Whether the source takes part in entity suggestion.
    pub fn suggests_entities(&self) -> bool {
        self.config
            .get("suggest")
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| self.kind.suggests_entities())
    }
}

fn parse_key<T: std::str::FromStr>(
    config: &BTreeMap<String, String>,
    id: &str,
    key: &str,
) -> Result<Option<T>> {
    match config.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("source {id}: bad value {v:?} for `{key}`"))),
    }
}

/// One `[[source]]` table of a sources file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: String,
    pub kind: SourceKind,
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourcesFile {
    #[serde(default)]
    pub source: Vec<SourceSpec>,
}

/// Builds sources from specs, rejecting duplicate ids.
pub fn build_sources(specs: &[SourceSpec], base_dir: &Path) -> Result<Vec<RelationSource>> {
    let mut out: Vec<RelationSource> = Vec::with_capacity(specs.len());
    for s in specs {
        if out.iter().any(|o| o.id == s.id) {
            return Err(Error::Config(format!("duplicate source id {:?}", s.id)));
        }
        out.push(RelationSource::from_config(&s.id, s.kind, s.config.clone(), base_dir)?);
    }
    Ok(out)
}

/// Loads a TOML sources file.
pub fn load_sources(path: &Path) -> Result<Vec<RelationSource>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SourcesFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    build_sources(&file.source, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sources_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.tsv"), "earth\torbits\tsun\n").unwrap();
        let cfg = dir.path().join("sources.toml");
        std::fs::write(
            &cfg,
            r#"
[[source]]
id = "openie"
kind = "triple_lookup"
config = { path = "t.tsv", max_results = "10" }

[[source]]
id = "gpt"
kind = "generative_lm"
"#,
        )
        .unwrap();
        let s = load_sources(&cfg).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s[0].backend().is_some());
        assert_eq!(s[0].result_cap(), 10);
        assert!(s[0].suggests_entities());
        assert!(s[1].backend().is_none());
        assert!(!s[1].suggests_entities());
        assert_eq!(s[1].result_cap(), DEFAULT_RESULT_CAP);
    }

    #[test]
    fn rejects_duplicates_and_bad_values() {
        let spec = |id: &str| SourceSpec {
            id: id.into(),
            kind: SourceKind::Autocomplete,
            config: BTreeMap::new(),
        };
        assert!(build_sources(&[spec("a"), spec("a")], Path::new(".")).is_err());
        let mut bad = spec("b");
        bad.config.insert("max_results".into(), "many".into());
        assert!(build_sources(&[bad], Path::new(".")).is_err());
        let mut missing = spec("c");
        missing.kind = SourceKind::TripleLookup;
        missing.config.insert("path".into(), "/nonexistent.tsv".into());
        assert!(matches!(
            build_sources(&[missing], Path::new(".")),
            Err(Error::Config(_))
        ));
    }
}
