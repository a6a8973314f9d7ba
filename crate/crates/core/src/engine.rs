//! One-stop entry point tying sources, snapshot, embeddings and search
//! together. Used by the command-line tool and the C interface.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{beam_search, score_all_pairs, to_mappings, PairTable, SearchConfig};
use crate::model::{entities, DomainSide, Entity, Mapping, PairSimilarity};
use crate::relations::{
    build_sources, Mode, RelationIndex, RelationSource, Snapshot, SourceKind, SourceSpec,
    SourceWarning,
};
use crate::scoring::{QuadrupleExplanation, Scorer};
use crate::similarity::{
    CachedEmbedder, EmbeddingProvider, HashedTrigramEmbedder, RemoteEmbedder, Stoplist,
};

pub const DEFAULT_STOPLIST_SIZE: usize = 500;

/// Everything a run can be configured with. Every field has a default, so
/// a TOML file only needs to name what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub snapshot: Option<PathBuf>,
    pub live: bool,
    pub embed_url: Option<String>,
    pub embedding_cache: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub stoplist_size: usize,
    pub sim_threshold: f64,
    pub cluster_threshold: f64,
    pub top_k: usize,
    pub beam_width: usize,
    /// Source ids to leave out.
    pub disable: Vec<String>,
    pub source: Vec<SourceSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SearchConfig::default();
        RunConfig {
            snapshot: None,
            live: false,
            embed_url: None,
            embedding_cache: None,
            stoplist: None,
            stoplist_size: DEFAULT_STOPLIST_SIZE,
            sim_threshold: s.sim_threshold,
            cluster_threshold: s.cluster_threshold,
            top_k: s.top_k_clusters,
            beam_width: s.beam_width,
            disable: Vec::new(),
            source: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            beam_width: self.beam_width,
            top_k_clusters: self.top_k,
            sim_threshold: self.sim_threshold,
            cluster_threshold: self.cluster_threshold,
        }
    }

    pub fn mode(&self) -> Mode {
        if self.live {
            Mode::Live
        } else {
            Mode::Offline
        }
    }
}

/// Ranked mappings plus the evidence behind the best one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapOutcome {
    pub base: Vec<String>,
    pub target: Vec<String>,
    pub mappings: Vec<Mapping>,
    /// `sim*` of every pair of assignments in the best mapping.
    pub evidence: Vec<PairSimilarity>,
    pub warnings: Vec<SourceWarning>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding_warnings: Vec<String>,
}

impl MapOutcome {
    pub fn best(&self) -> Option<&Mapping> {
        self.mappings.first()
    }
}

pub struct Engine {
    snapshot: Arc<Snapshot>,
    sources: Vec<RelationSource>,
    provider: Arc<dyn EmbeddingProvider>,
    stoplist: Stoplist,
    search: SearchConfig,
    mode: Mode,
}

impl Engine {
    pub fn new(
        snapshot: Arc<Snapshot>,
        sources: Vec<RelationSource>,
        provider: Arc<dyn EmbeddingProvider>,
        stoplist: Stoplist,
        search: SearchConfig,
        mode: Mode,
    ) -> Result<Self> {
        search.scoring().validate()?;
        if search.beam_width == 0 {
            return Err(Error::Config("beam width must be at least 1".into()));
        }
        Ok(Engine {
            snapshot,
            sources,
            provider,
            stoplist,
            search,
            mode,
        })
    }

    /// Offline engine over a snapshot with default settings: every source
    /// id found in the snapshot is used, embeddings come from the local
    /// trigram embedder.
    pub fn from_snapshot(snapshot: Snapshot) -> Self {
        let sources = snapshot_sources(&snapshot);
        Engine::new(
            Arc::new(snapshot),
            sources,
            Arc::new(HashedTrigramEmbedder::default()),
            Stoplist::default_list(),
            SearchConfig::default(),
            Mode::Offline,
        )
        .expect("default configuration is valid")
    }

    /// Builds an engine from a run configuration. Relative source paths
    /// resolve against `base_dir`.
    pub fn from_config(config: &RunConfig, base_dir: &Path) -> Result<Self> {
        let snapshot = match &config.snapshot {
            Some(p) if p.exists() || !config.live => Snapshot::load(p)?,
            _ => Snapshot::new(),
        };
        let mut sources = build_sources(&config.source, base_dir)?;
        for s in snapshot_sources(&snapshot) {
            if !sources.iter().any(|x| x.id == s.id) {
                sources.push(s);
            }
        }
        for id in &config.disable {
            if !sources.iter().any(|s| &s.id == id) {
                return Err(Error::Config(format!("cannot disable unknown source {id:?}")));
            }
        }
        sources.retain(|s| !config.disable.contains(&s.id));

        let provider: Arc<dyn EmbeddingProvider> = match (&config.embed_url, &config.embedding_cache) {
            (Some(url), cache) => {
                let remote: Arc<dyn EmbeddingProvider> = Arc::new(RemoteEmbedder::connect(url)?);
                match cache {
                    Some(path) => Arc::new(CachedEmbedder::with_provider(Some(path), remote)?),
                    None => remote,
                }
            }
            (None, Some(path)) if path.exists() => {
                let id = cached_provider_id(path)?;
                Arc::new(CachedEmbedder::replay(path, &id)?)
            }
            (None, _) => Arc::new(HashedTrigramEmbedder::default()),
        };
        let stoplist = match &config.stoplist {
            Some(p) => Stoplist::load(p, config.stoplist_size)?,
            None => Stoplist::default_with_limit(config.stoplist_size),
        };
        Engine::new(
            Arc::new(snapshot),
            sources,
            provider,
            stoplist,
            config.search(),
            config.mode(),
        )
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn sources(&self) -> &[RelationSource] {
        &self.sources
    }

    pub fn search_config(&self) -> SearchConfig {
        self.search
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    /// Same engine with one more source left out.
    pub fn without_source(&self, id: &str) -> Engine {
        Engine {
            snapshot: self.snapshot.clone(),
            sources: self.sources.iter().filter(|s| s.id != id).cloned().collect(),
            provider: self.provider.clone(),
            stoplist: self.stoplist.clone(),
            search: self.search,
            mode: self.mode,
        }
    }

    pub fn with_search(&self, search: SearchConfig) -> Result<Engine> {
        Engine::new(
            self.snapshot.clone(),
            self.sources.clone(),
            self.provider.clone(),
            self.stoplist.clone(),
            search,
            self.mode,
        )
    }

    /// Relation sets of every intra-domain pair.
    pub fn relations(&self, base: &[Entity], target: &[Entity]) -> RelationIndex {
        RelationIndex::build(&[base, target], &self.sources, &self.snapshot, self.mode)
    }

    fn scorer<'a>(&'a self, index: &'a RelationIndex) -> Scorer<'a> {
        Scorer::new(index, self.provider.as_ref(), &self.stoplist, self.search.scoring())
    }

    pub fn pair_table(&self, base: &[Entity], target: &[Entity]) -> Result<(PairTable, RelationIndex)> {
        let index = self.relations(base, target);
        let table = score_all_pairs(base, target, &self.scorer(&index))?;
        Ok((table, index))
    }

    /// Ranked mappings of `base` into `target`.
    pub fn map(&self, base: &[Entity], target: &[Entity]) -> Result<MapOutcome> {
        check_sides(base, target)?;
        let index = self.relations(base, target);
        let scorer = self.scorer(&index);
        let table = score_all_pairs(base, target, &scorer)?;
        let states = beam_search(&table, self.search.beam_width);
        let mappings = to_mappings(&states, base, target, &table)?;
        let mut evidence = Vec::new();
        if let Some(best) = mappings.first() {
            for (x, a) in best.pairs.iter().enumerate() {
                for b in &best.pairs[x + 1..] {
                    let s = scorer.sim_star(&a.base, &b.base, &a.target, &b.target);
                    if s.score > 0.0 {
                        evidence.push(s);
                    }
                }
            }
        }
        Ok(MapOutcome {
            base: base.iter().map(|e| e.name.clone()).collect(),
            target: target.iter().map(|e| e.name.clone()).collect(),
            mappings,
            evidence,
            embedding_warnings: scorer.warnings(),
            warnings: index.warnings,
        })
    }

    /// Parses raw names, then maps.
    pub fn map_names<S: AsRef<str>>(&self, base: &[S], target: &[S]) -> Result<MapOutcome> {
        let b = entities(base, DomainSide::Base)?;
        let t = entities(target, DomainSide::Target)?;
        self.map(&b, &t)
    }

    /// Clusters, edges and matching behind `sim*(b1, b2, t1, t2)`.
    pub fn explain(
        &self,
        base_pair: (&str, &str),
        target_pair: (&str, &str),
    ) -> Result<QuadrupleExplanation> {
        let b = entities(&[base_pair.0, base_pair.1], DomainSide::Base)?;
        let t = entities(&[target_pair.0, target_pair.1], DomainSide::Target)?;
        let index = self.relations(&b, &t);
        let scorer = self.scorer(&index);
        Ok(scorer.explain(&b[0].name, &b[1].name, &t[0].name, &t[1].name))
    }
}

fn check_sides(base: &[Entity], target: &[Entity]) -> Result<()> {
    if base.len() < 2 || target.len() < 2 {
        return Err(Error::Input(format!(
            "need at least two entities per side, got {} base and {} target",
            base.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Snapshot-only sources for every id recorded in `snapshot`.
pub fn snapshot_sources(snapshot: &Snapshot) -> Vec<RelationSource> {
    snapshot
        .source_ids()
        .iter()
        .map(|id| RelationSource::snapshot_only(id, SourceKind::LocalKb))
        .collect()
}

/// Provider id of the first record in an embedding cache file.
fn cached_provider_id(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .find_map(|l| {
            serde_json::from_str::<serde_json::Value>(l)
                .ok()?
                .get("provider")?
                .as_str()
                .map(str::to_string)
        })
        .ok_or_else(|| Error::Config(format!("{}: no cached embeddings", path.display())))
}
