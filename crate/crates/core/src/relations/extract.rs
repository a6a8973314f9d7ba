use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::snapshot::{QueryDirection, Snapshot};
use super::source::RelationSource;
use crate::error::{Error, Result};
use crate::model::{Entity, RelationPhrase, RelationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// The backend failed; the source was skipped for this query.
    Unavailable,
    /// Offline and the snapshot has no answer.
    SnapshotMiss,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceWarning {
    pub source: String,
    pub kind: WarningKind,
    pub message: String,
}

/// Whether network-backed sources may be queried on a snapshot miss.
/// Local files are always consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Offline,
    Live,
}

fn query_source(
    src: &RelationSource,
    head: &Entity,
    tail: &Entity,
    snapshot: &Snapshot,
    mode: Mode,
    warnings: &mut Vec<SourceWarning>,
) -> Vec<RelationPhrase> {
    if let Some(hit) = snapshot.relations(&src.id, &head.name, &tail.name) {
        return hit;
    }
    let backend = match src.backend() {
        Some(b) if mode == Mode::Live || !b.is_network() => b,
        _ => {
            warnings.push(SourceWarning {
                source: src.id.clone(),
                kind: WarningKind::SnapshotMiss,
                message: format!("no snapshot entry for ({}, {})", head.name, tail.name),
            });
            return Vec::new();
        }
    };
    match backend.relations(head, tail, &src.id) {
        Ok(answer) => {
            snapshot.record_relations(&src.id, &head.name, &tail.name, answer.forward);
            if let Some(rev) = answer.reverse {
                snapshot.record_relations(&src.id, &tail.name, &head.name, rev);
            }
            snapshot
                .relations(&src.id, &head.name, &tail.name)
                .unwrap_or_default()
        }
        Err(e) => {
            warn!("{}: {e}", src.id);
            warnings.push(SourceWarning {
                source: src.id.clone(),
                kind: WarningKind::Unavailable,
                message: e.to_string(),
            });
            Vec::new()
        }
    }
}

/// Union of every source's phrases for the directed pair `(head, tail)`.
///
/// Snapshot entries win; on a miss the source's backend is asked (network
/// backends only in [`Mode::Live`]) and its answer is recorded. Failing
/// sources are skipped with a warning.
pub fn extract_relations(
    head: &Entity,
    tail: &Entity,
    sources: &[RelationSource],
    snapshot: &Snapshot,
    mode: Mode,
) -> Result<(RelationSet, Vec<SourceWarning>)> {
    if head == tail {
        return Err(Error::Input(format!(
            "cannot extract relations of {:?} with itself",
            head.name
        )));
    }
    let mut set = RelationSet::new(&head.name, &tail.name)?;
    let mut warnings = Vec::new();
    for src in sources {
        let mut phrases = query_source(src, head, tail, snapshot, mode, &mut warnings);
        phrases.truncate(src.result_cap());
        set.extend(phrases);
    }
    Ok((set, warnings))
}

/// Entities related to `anchor` through `relation` according to the
/// sources that take part in suggestion.
pub fn related_entities(
    anchor: &Entity,
    relation: &str,
    direction: QueryDirection,
    sources: &[RelationSource],
    snapshot: &Snapshot,
    mode: Mode,
) -> (Vec<String>, Vec<SourceWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for src in sources.iter().filter(|s| s.suggests_entities()) {
        let found = match snapshot.entities(&src.id, &anchor.name, relation, direction) {
            Some(hit) => hit,
            None => match src.backend() {
                Some(b) if mode == Mode::Live || !b.is_network() => {
                    match b.entities(anchor, relation, direction, &src.id) {
                        Ok(list) => {
                            snapshot.record_entities(&src.id, &anchor.name, relation, direction, list);
                            snapshot
                                .entities(&src.id, &anchor.name, relation, direction)
                                .unwrap_or_default()
                        }
                        Err(e) => {
                            warnings.push(SourceWarning {
                                source: src.id.clone(),
                                kind: WarningKind::Unavailable,
                                message: e.to_string(),
                            });
                            Vec::new()
                        }
                    }
                }
                _ => Vec::new(),
            },
        };
        out.extend(found);
    }
    (out, warnings)
}

/// Relation sets of every ordered pair inside each domain.
#[derive(Debug, Clone, Default)]
pub struct RelationIndex {
    sets: BTreeMap<(String, String), RelationSet>,
    pub warnings: Vec<SourceWarning>,
}

impl RelationIndex {
    /// Extracts all intra-domain pairs of `domains`, in parallel across
    /// unordered pairs. Within a pair the name-ordered direction is asked
    /// first, so sources answering both directions are queried once.
    pub fn build(
        domains: &[&[Entity]],
        sources: &[RelationSource],
        snapshot: &Snapshot,
        mode: Mode,
    ) -> Self {
        let mut tasks = Vec::new();
        for domain in domains {
            for (i, a) in domain.iter().enumerate() {
                for b in &domain[i + 1..] {
                    if a.name != b.name {
                        tasks.push(if a.name < b.name { (a, b) } else { (b, a) });
                    }
                }
            }
        }
        let results: Vec<_> = tasks
            .par_iter()
            .map(|(a, b)| {
                let (ab, mut w1) = extract_relations(a, b, sources, snapshot, mode)
                    .expect("distinct entities");
                let (ba, w2) = extract_relations(b, a, sources, snapshot, mode)
                    .expect("distinct entities");
                w1.extend(w2);
                (ab, ba, w1)
            })
            .collect();
        let mut index = RelationIndex::default();
        for (ab, ba, w) in results {
            index.warnings.extend(w);
            index.insert(ab);
            index.insert(ba);
        }
        index.warnings.sort();
        index.warnings.dedup();
        index
    }

    pub fn from_sets(sets: impl IntoIterator<Item = RelationSet>) -> Self {
        let mut index = RelationIndex::default();
        for s in sets {
            index.insert(s);
        }
        index
    }

    pub fn insert(&mut self, set: RelationSet) {
        self.sets.insert((set.head.clone(), set.tail.clone()), set);
    }

    pub fn get(&self, head: &str, tail: &str) -> Option<&RelationSet> {
        self.sets.get(&(head.to_string(), tail.to_string()))
    }

    /// Relation texts for `(head, tail)`, empty when unknown.
    pub fn texts(&self, head: &str, tail: &str) -> Vec<&str> {
        self.get(head, tail)
            .map(|s| s.texts().collect())
            .unwrap_or_default()
    }

    pub fn sets(&self) -> impl Iterator<Item = &RelationSet> {
        self.sets.values()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}
