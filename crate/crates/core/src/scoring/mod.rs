//! Scores how well a base entity pair corresponds to a target entity pair.
//!
//! Each directed relation set is clustered, clusters of the two sides are
//! connected by their best member similarity, and the strongest edges of a
//! maximum-weight matching are summed.

mod cluster;
mod matching;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

pub use cluster::RelationCluster;
pub(crate) use cluster::{agglomerate, closest_to_centroid};
pub use matching::{matching_weight, max_weight_matching};

use crate::error::{Error, Result};
use crate::model::{
    DirectionEvidence, DomainSide, MatchedEdge, PairDirection, PairSimilarity, RelationSet,
};
use crate::relations::RelationIndex;
use crate::similarity::{cosine, similarity_of, Embedding, EmbeddingProvider, Stoplist};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringParams {
    pub sim_threshold: f64,
    pub cluster_threshold: f64,
    pub top_k: usize,
}

impl Default for ScoringParams {
    fn default() -> Self {
        ScoringParams {
            sim_threshold: 0.2,
            cluster_threshold: 0.5,
            top_k: 3,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sim_threshold) {
            return Err(Error::Config(format!(
                "similarity threshold {} outside [0, 1]",
                self.sim_threshold
            )));
        }
        if !(self.cluster_threshold > 0.0 && self.cluster_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "cluster threshold {} outside (0, 1]",
                self.cluster_threshold
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Clusters of both sides and the cluster-to-cluster edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGraph {
    pub base_clusters: Vec<RelationCluster>,
    pub target_clusters: Vec<RelationCluster>,
    /// `edges[i][j]`: best phrase similarity between base cluster `i` and
    /// target cluster `j`.
    pub edges: Vec<Vec<f64>>,
}

/// Outcome of comparing one base relation set with one target relation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalScore {
    pub score: f64,
    /// Weight of the full matching, before keeping the top edges.
    pub matching_weight: f64,
    /// Retained edges, strongest first.
    pub edges: Vec<MatchedEdge>,
}

impl DirectionalScore {
    fn zero() -> Self {
        DirectionalScore {
            score: 0.0,
            matching_weight: 0.0,
            edges: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionExplanation {
    pub direction: PairDirection,
    pub base_relations: (String, String),
    pub target_relations: (String, String),
    pub graph: ClusterGraph,
    pub matching: Vec<MatchedEdge>,
    pub retained: Vec<MatchedEdge>,
    pub score: f64,
}

/// Everything behind one `sim*` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleExplanation {
    pub base_pair: (String, String),
    pub target_pair: (String, String),
    pub directions: Vec<DirectionExplanation>,
    pub score: f64,
}

/// Embeddings and similarity settings shared by every comparison.
struct PhraseSpace<'a> {
    provider: &'a dyn EmbeddingProvider,
    stoplist: &'a Stoplist,
    params: ScoringParams,
    vectors: RwLock<HashMap<String, Option<Embedding>>>,
    warnings: Mutex<BTreeSet<String>>,
}

impl<'a> PhraseSpace<'a> {
    fn new(provider: &'a dyn EmbeddingProvider, stoplist: &'a Stoplist, params: ScoringParams) -> Self {
        PhraseSpace {
            provider,
            stoplist,
            params,
            vectors: RwLock::new(HashMap::new()),
            warnings: Mutex::new(BTreeSet::new()),
        }
    }

    /// Embeds every unseen text in one batch. Failures are remembered as
    /// missing vectors; their edges count as zero.
    fn prefetch<'t>(&self, texts: impl IntoIterator<Item = &'t str>) -> Option<Error> {
        let missing: Vec<&str> = {
            let map = self.vectors.read();
            let set: BTreeSet<&str> = texts.into_iter().filter(|t| !map.contains_key(*t)).collect();
            set.into_iter().collect()
        };
        if missing.is_empty() {
            return None;
        }
        let results = self.provider.embed_batch(&missing);
        let mut first_err = None;
        let mut map = self.vectors.write();
        for (t, r) in missing.iter().zip(results) {
            match r {
                Ok(v) => {
                    map.insert(t.to_string(), Some(v));
                }
                Err(e) => {
                    warn!("dropping edges of {t:?}: {e}");
                    self.warnings
                        .lock()
                        .insert(format!("no embedding for {t:?}: {e}"));
                    map.insert(t.to_string(), None);
                    first_err.get_or_insert(e);
                }
            }
        }
        first_err
    }

    fn vector(&self, text: &str) -> Option<Embedding> {
        if let Some(v) = self.vectors.read().get(text) {
            return v.clone();
        }
        self.prefetch([text]);
        self.vectors.read().get(text).cloned().flatten()
    }

    fn sim(&self, a: &str, b: &str) -> f64 {
        if a == b || self.stoplist.contains(a) || self.stoplist.contains(b) {
            return similarity_of(a, b, &[], &[], self.stoplist, self.params.sim_threshold);
        }
        match (self.vector(a), self.vector(b)) {
            (Some(va), Some(vb)) => {
                similarity_of(a, b, &va, &vb, self.stoplist, self.params.sim_threshold)
            }
            _ => 0.0,
        }
    }

    fn cluster(&self, set: &RelationSet, side: DomainSide) -> Vec<RelationCluster> {
        let phrases = &set.relations;
        if phrases.is_empty() {
            return Vec::new();
        }
        let vecs: Vec<Option<Embedding>> = phrases.iter().map(|p| self.vector(&p.text)).collect();
        let n = phrases.len();
        let mut sims = vec![vec![0.0; n]; n];
        for i in 0..n {
            sims[i][i] = 1.0;
            for j in i + 1..n {
                let c = match (&vecs[i], &vecs[j]) {
                    (Some(a), Some(b)) => cosine(a, b),
                    _ => -1.0,
                };
                sims[i][j] = c;
                sims[j][i] = c;
            }
        }
        let labels: Vec<&str> = phrases.iter().map(|p| p.text.as_str()).collect();
        let rep = |m: &[usize]| cluster::medoid(&sims, m);
        agglomerate(&sims, &labels, self.params.cluster_threshold, &rep)
            .into_iter()
            .map(|(members, r)| RelationCluster {
                side,
                members: members.iter().map(|&i| phrases[i].clone()).collect(),
                representative: labels[r].to_string(),
            })
            .collect()
    }

    fn graph(&self, base: &[RelationCluster], target: &[RelationCluster]) -> Vec<Vec<f64>> {
        base.iter()
            .map(|cb| {
                target
                    .iter()
                    .map(|ct| {
                        let mut best = 0.0f64;
                        for pb in &cb.members {
                            for pt in &ct.members {
                                best = best.max(self.sim(&pb.text, &pt.text));
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect()
    }

    /// Matching over the cluster graph; returns all matched edges and the
    /// retained top-k.
    fn score_graph(
        &self,
        base: &[RelationCluster],
        target: &[RelationCluster],
        edges: &[Vec<f64>],
    ) -> (Vec<MatchedEdge>, DirectionalScore) {
        let m = max_weight_matching(edges);
        let matching_weight = matching_weight(edges, &m);
        let all: Vec<MatchedEdge> = m
            .iter()
            .map(|&(i, j)| MatchedEdge {
                base_label: base[i].representative.clone(),
                target_label: target[j].representative.clone(),
                weight: edges[i][j],
            })
            .collect();
        let mut retained = all.clone();
        retained.sort_by(|x, y| {
            y.weight
                .total_cmp(&x.weight)
                .then_with(|| x.base_label.cmp(&y.base_label))
                .then_with(|| x.target_label.cmp(&y.target_label))
        });
        retained.truncate(self.params.top_k);
        let score = retained.iter().map(|e| e.weight).sum();
        (
            all,
            DirectionalScore {
                score,
                matching_weight,
                edges: retained,
            },
        )
    }
}

/// Groups near-synonymous phrases of one relation set.
pub fn cluster_relations(
    set: &RelationSet,
    side: DomainSide,
    provider: &dyn EmbeddingProvider,
    distance_threshold: f64,
) -> Result<Vec<RelationCluster>> {
    let stoplist = Stoplist::empty();
    let params = ScoringParams {
        cluster_threshold: distance_threshold,
        ..ScoringParams::default()
    };
    let space = PhraseSpace::new(provider, &stoplist, params);
    if let Some(e) = space.prefetch(set.texts()) {
        return Err(e);
    }
    Ok(space.cluster(set, side))
}

/// Similarity of a base relation set and a target relation set.
pub fn directional_sim(
    r_base: &RelationSet,
    r_target: &RelationSet,
    provider: &dyn EmbeddingProvider,
    stoplist: &Stoplist,
    params: ScoringParams,
) -> Result<DirectionalScore> {
    if r_base.is_empty() || r_target.is_empty() {
        return Ok(DirectionalScore::zero());
    }
    let space = PhraseSpace::new(provider, stoplist, params);
    if let Some(e) = space.prefetch(r_base.texts().chain(r_target.texts())) {
        return Err(e);
    }
    let b = space.cluster(r_base, DomainSide::Base);
    let t = space.cluster(r_target, DomainSide::Target);
    let edges = space.graph(&b, &t);
    Ok(space.score_graph(&b, &t, &edges).1)
}

type ClusterKey = (String, String, DomainSide);
type DirectionalKey = (String, String, String, String);

/// Pair scorer over a fixed relation index, caching clusters and
/// directional scores.
pub struct Scorer<'a> {
    index: &'a RelationIndex,
    space: PhraseSpace<'a>,
    clusters: RwLock<HashMap<ClusterKey, Arc<Vec<RelationCluster>>>>,
    directional: RwLock<HashMap<DirectionalKey, Arc<DirectionalScore>>>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        index: &'a RelationIndex,
        provider: &'a dyn EmbeddingProvider,
        stoplist: &'a Stoplist,
        params: ScoringParams,
    ) -> Self {
        let space = PhraseSpace::new(provider, stoplist, params);
        space.prefetch(index.sets().flat_map(|s| s.texts()));
        Scorer {
            index,
            space,
            clusters: RwLock::new(HashMap::new()),
            directional: RwLock::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> ScoringParams {
        self.space.params
    }

    pub fn index(&self) -> &RelationIndex {
        self.index
    }

    /// Embedding problems met so far, sorted.
    pub fn warnings(&self) -> Vec<String> {
        self.space.warnings.lock().iter().cloned().collect()
    }

    pub fn clusters(&self, head: &str, tail: &str, side: DomainSide) -> Arc<Vec<RelationCluster>> {
        let key = (head.to_string(), tail.to_string(), side);
        if let Some(c) = self.clusters.read().get(&key) {
            return c.clone();
        }
        let c = Arc::new(match self.index.get(head, tail) {
            Some(set) => self.space.cluster(set, side),
            None => Vec::new(),
        });
        self.clusters.write().entry(key).or_insert(c).clone()
    }

    /// `sim(R(bh, bt), R(th, tt))`.
    pub fn directional(&self, bh: &str, bt: &str, th: &str, tt: &str) -> Arc<DirectionalScore> {
        let key = (bh.to_string(), bt.to_string(), th.to_string(), tt.to_string());
        if let Some(d) = self.directional.read().get(&key) {
            return d.clone();
        }
        let b = self.clusters(bh, bt, DomainSide::Base);
        let t = self.clusters(th, tt, DomainSide::Target);
        let d = Arc::new(if b.is_empty() || t.is_empty() {
            DirectionalScore::zero()
        } else {
            let edges = self.space.graph(&b, &t);
            self.space.score_graph(&b, &t, &edges).1
        });
        self.directional.write().entry(key).or_insert(d).clone()
    }

    /// Fills the directional cache for every combination of a directed
    /// base pair and a directed target pair, in parallel.
    pub fn prepare(&self, base: &[String], target: &[String]) {
        let directed = |names: &[String]| -> Vec<(String, String)> {
            let mut out = Vec::new();
            for a in names {
                for b in names {
                    if a != b {
                        out.push((a.clone(), b.clone()));
                    }
                }
            }
            out
        };
        let bp = directed(base);
        let tp = directed(target);
        bp.par_iter()
            .map(|(h, t)| self.clusters(h, t, DomainSide::Base))
            .count();
        tp.par_iter()
            .map(|(h, t)| self.clusters(h, t, DomainSide::Target))
            .count();
        let jobs: Vec<_> =
            bp.iter().flat_map(|b| tp.iter().map(move |t| (b, t))).collect();
        jobs.par_iter()
            .map(|(b, t)| self.directional(&b.0, &b.1, &t.0, &t.1))
            .count();
    }

    /// `sim*(b1, b2, t1, t2)`: forward plus backward directional scores.
    pub fn sim_star(&self, b1: &str, b2: &str, t1: &str, t2: &str) -> PairSimilarity {
        let fwd = self.directional(b1, b2, t1, t2);
        let back = self.directional(b2, b1, t2, t1);
        PairSimilarity {
            base_pair: (b1.to_string(), b2.to_string()),
            target_pair: (t1.to_string(), t2.to_string()),
            score: fwd.score + back.score,
            evidence: vec![
                DirectionEvidence {
                    direction: PairDirection::Forward,
                    edges: fwd.edges.clone(),
                },
                DirectionEvidence {
                    direction: PairDirection::Backward,
                    edges: back.edges.clone(),
                },
            ],
        }
    }

    /// Clusters, edges and matchings behind `sim_star`.
    pub fn explain(&self, b1: &str, b2: &str, t1: &str, t2: &str) -> QuadrupleExplanation {
        let dir = |direction, bh: &str, bt: &str, th: &str, tt: &str| {
            let b = self.clusters(bh, bt, DomainSide::Base);
            let t = self.clusters(th, tt, DomainSide::Target);
            let edges = self.space.graph(&b, &t);
            let (matching, scored) = self.space.score_graph(&b, &t, &edges);
            DirectionExplanation {
                direction,
                base_relations: (bh.to_string(), bt.to_string()),
                target_relations: (th.to_string(), tt.to_string()),
                graph: ClusterGraph {
                    base_clusters: b.to_vec(),
                    target_clusters: t.to_vec(),
                    edges,
                },
                matching,
                retained: scored.edges,
                score: scored.score,
            }
        };
        let fwd = dir(PairDirection::Forward, b1, b2, t1, t2);
        let back = dir(PairDirection::Backward, b2, b1, t2, t1);
        QuadrupleExplanation {
            base_pair: (b1.to_string(), b2.to_string()),
            target_pair: (t1.to_string(), t2.to_string()),
            score: fwd.score + back.score,
            directions: vec![fwd, back],
        }
    }
}
