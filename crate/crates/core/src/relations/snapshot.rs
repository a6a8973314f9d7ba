//! Frozen dump of everything the sources answered.
//!
//! File layout: UTF-8, one JSON object per line. The first line is a header
//! `{"format": "relmap-snapshot", "version": 1, "created_at": ...}`. Every
//! following line is either a relation record
//! `{"source": s, "head": h, "tail": t, "relations": [..]}` or an entity
//! record produced by suggestion queries
//! `{"source": s, "anchor": a, "relation": r, "direction": "forward", "entities": [..]}`.
//! Records are written sorted by key so equal snapshots serialize to equal
//! bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_phrase, normalize_text, RelationPhrase};

pub const SNAPSHOT_FORMAT: &str = "relmap-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Direction of an entity query: `Forward` asks for `e` in
/// `(anchor, relation, e)`, `Backward` for `e` in `(e, relation, anchor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryDirection {
    Forward,
    Backward,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    created_at: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PhraseEntry {
    Text(String),
    Weighted { text: String, weight: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationRecord {
    source: String,
    head: String,
    tail: String,
    relations: Vec<PhraseEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityRecord {
    source: String,
    anchor: String,
    relation: String,
    direction: QueryDirection,
    entities: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Record {
    Relations(RelationRecord),
    Entities(EntityRecord),
}

type RelationKey = (String, String, String);
type EntityKey = (String, String, String, QueryDirection);

/// Append-only cache of source answers, safe for concurrent readers and
/// serialized writers.
#[derive(Debug)]
pub struct Snapshot {
    created_at: DateTime<Utc>,
    relations: RwLock<BTreeMap<RelationKey, Vec<RelationPhrase>>>,
    entities: RwLock<BTreeMap<EntityKey, Vec<String>>>,
}

impl Default for Snapshot {
    fn default() -> Self {
        Self::new()
    }
}

impl Clone for Snapshot {
    fn clone(&self) -> Self {
        Snapshot {
            created_at: self.created_at,
            relations: RwLock::new(self.relations.read().clone()),
            entities: RwLock::new(self.entities.read().clone()),
        }
    }
}

impl Snapshot {
    pub fn new() -> Self {
        Snapshot {
            created_at: Utc::now(),
            relations: RwLock::new(BTreeMap::new()),
            entities: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes(), Path::new("<memory>"))
    }

    fn read<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            what: "snapshot",
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = reader.lines().enumerate();
        let header: Header = loop {
            match lines.next() {
                None => return Err(parse_err(1, "missing header line".into())),
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line)
                        .map_err(|e| parse_err(i + 1, format!("bad header: {e}")))?;
                }
            }
        };
        if header.format != SNAPSHOT_FORMAT {
            return Err(parse_err(1, format!("unknown format {:?}", header.format)));
        }
        if header.version != SNAPSHOT_VERSION {
            return Err(parse_err(
                1,
                format!("unsupported version {}", header.version),
            ));
        }
        let created_at = DateTime::parse_from_rfc3339(&header.created_at)
            .map_err(|e| parse_err(1, format!("bad created_at: {e}")))?
            .with_timezone(&Utc);
        let snap = Snapshot {
            created_at,
            ..Snapshot::new()
        };
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
            match rec {
                Record::Relations(r) => {
                    let phrases = r
                        .relations
                        .into_iter()
                        .filter_map(|p| match p {
                            PhraseEntry::Text(t) => RelationPhrase::new(&t, &r.source),
                            PhraseEntry::Weighted { text, weight } => {
                                RelationPhrase::new(&text, &r.source)
                                    .map(|p| p.with_weight(Some(weight)))
                            }
                        })
                        .collect();
                    snap.record_relations(&r.source, &r.head, &r.tail, phrases);
                }
                Record::Entities(r) => {
                    snap.record_entities(&r.source, &r.anchor, &r.relation, r.direction, r.entities);
                }
            }
        }
        Ok(snap)
    }

    /// Writes the canonical serialization to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header = Header {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            created_at: self.created_at.to_rfc3339_opts(SecondsFormat::Secs, true),
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for ((source, head, tail), phrases) in self.relations.read().iter() {
            let rec = RelationRecord {
                source: source.clone(),
                head: head.clone(),
                tail: tail.clone(),
                relations: phrases
                    .iter()
                    .map(|p| match p.weight_hint {
                        Some(weight) => PhraseEntry::Weighted {
                            text: p.text.clone(),
                            weight,
                        },
                        None => PhraseEntry::Text(p.text.clone()),
                    })
                    .collect(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?)?;
        }
        for ((source, anchor, relation, direction), entities) in self.entities.read().iter() {
            let rec = EntityRecord {
                source: source.clone(),
                anchor: anchor.clone(),
                relation: relation.clone(),
                direction: *direction,
                entities: entities.clone(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?)?;
        }
        Ok(())
    }

    pub fn relations(&self, source: &str, head: &str, tail: &str) -> Option<Vec<RelationPhrase>> {
        self.relations
            .read()
            .get(&(source.to_string(), head.to_string(), tail.to_string()))
            .cloned()
    }

    /// Records an answer for `(source, head, tail)`. An empty list is a
    /// negative entry. Existing entries are never replaced; returns whether
    /// the entry was new.
    pub fn record_relations(
        &self,
        source: &str,
        head: &str,
        tail: &str,
        phrases: Vec<RelationPhrase>,
    ) -> bool {
        let key = (source.to_string(), normalize_text(head), normalize_text(tail));
        let mut map = self.relations.write();
        if map.contains_key(&key) {
            return false;
        }
        let mut seen = BTreeSet::new();
        let phrases = phrases
            .into_iter()
            .filter(|p| seen.insert(p.text.clone()))
            .map(|p| RelationPhrase {
                source: source.to_string(),
                ..p
            })
            .collect();
        map.insert(key, phrases);
        true
    }

    pub fn entities(
        &self,
        source: &str,
        anchor: &str,
        relation: &str,
        direction: QueryDirection,
    ) -> Option<Vec<String>> {
        self.entities
            .read()
            .get(&(
                source.to_string(),
                anchor.to_string(),
                relation.to_string(),
                direction,
            ))
            .cloned()
    }

    pub fn record_entities(
        &self,
        source: &str,
        anchor: &str,
        relation: &str,
        direction: QueryDirection,
        entities: Vec<String>,
    ) -> bool {
        let key = (
            source.to_string(),
            normalize_text(anchor),
            normalize_phrase(relation),
            direction,
        );
        let mut map = self.entities.write();
        if map.contains_key(&key) {
            return false;
        }
        let entities = entities
            .iter()
            .map(|e| normalize_text(e))
            .filter(|e| !e.is_empty())
            .collect();
        map.insert(key, entities);
        true
    }

    /// Whether `name` appears as head or tail of any relation record.
    pub fn mentions(&self, name: &str) -> bool {
        self.relations
            .read()
            .keys()
            .any(|(_, h, t)| h == name || t == name)
    }

    /// Source ids appearing in any record, sorted.
    pub fn source_ids(&self) -> Vec<String> {
        let mut ids: BTreeSet<String> = self
            .relations
            .read()
            .keys()
            .map(|(s, _, _)| s.clone())
            .collect();
        ids.extend(self.entities.read().keys().map(|(s, ..)| s.clone()));
        ids.into_iter().collect()
    }

    pub fn relation_record_count(&self) -> usize {
        self.relations.read().len()
    }

    pub fn entity_record_count(&self) -> usize {
        self.entities.read().len()
    }

    /// Per-source `(records, non-empty records, phrases)` counts.
    pub fn stats(&self) -> BTreeMap<String, (usize, usize, usize)> {
        let mut out: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
        for ((source, _, _), phrases) in self.relations.read().iter() {
            let e = out.entry(source.clone()).or_default();
            e.0 += 1;
            if !phrases.is_empty() {
                e.1 += 1;
            }
            e.2 += phrases.len();
        }
        out
    }

    /// Copies every record of `other` that is missing here.
    pub fn merge(&self, other: &Snapshot) {
        for ((s, h, t), p) in other.relations.read().iter() {
            self.record_relations(s, h, t, p.clone());
        }
        for ((s, a, r, d), e) in other.entities.read().iter() {
            self.record_entities(s, a, r, *d, e.clone());
        }
    }
}
