//! Tab-separated `(subject, predicate, object[, score])` files with a
//! sidecar offset index.
//!
//! The index lives next to the store as `<file>.idx` and maps each
//! normalized subject and object to the byte offsets of its lines. It is
//! rebuilt whenever the store's length or modification time changes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::time::UNIX_EPOCH;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::{Error, Result};
use crate::model::{normalize_phrase, normalize_text, Entity, RelationPhrase};

const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub score: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    version: u32,
    store_len: u64,
    store_mtime: u64,
    by_subject: BTreeMap<String, Vec<u64>>,
    by_object: BTreeMap<String, Vec<u64>>,
}

/// Turns graph-style predicates such as `/r/AtLocation` into `at location`.
pub fn humanize_predicate(raw: &str) -> String {
    let tail = raw.rsplit('/').next().unwrap_or(raw);
    let mut out = String::with_capacity(tail.len() + 4);
    let mut prev_lower = false;
    for c in tail.chars() {
        if c == '_' || c == '-' {
            out.push(' ');
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower {
            out.push(' ');
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
        out.extend(c.to_lowercase());
    }
    normalize_phrase(&out)
}

fn parse_line(line: &str, humanize: bool) -> std::result::Result<Option<Triple>, String> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 tab-separated fields, got {}", fields.len()));
    }
    let subject = normalize_text(fields[0]);
    let object = normalize_text(fields[2]);
    let predicate = if humanize {
        humanize_predicate(fields[1])
    } else {
        normalize_phrase(fields[1])
    };
    if subject.is_empty() || object.is_empty() || predicate.is_empty() {
        return Err("empty field".into());
    }
    let score = match fields.get(3) {
        Some(s) => Some(
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad score {s:?}"))?,
        ),
        None => None,
    };
    Ok(Some(Triple {
        subject,
        predicate,
        object,
        score,
    }))
}

/// Indexed triple file.
#[derive(Debug)]
pub struct TripleStore {
    path: PathBuf,
    humanize: bool,
    index: Index,
    reader: Mutex<BufReader<File>>,
}

impl TripleStore {
    /// Opens `path`, loading or (re)building the sidecar index.
    pub fn open(path: &Path) -> Result<Self> {
        Self::open_with(path, false, true)
    }

    /// Opens a graph edge dump; predicates are humanized.
    pub fn open_edge_dump(path: &Path) -> Result<Self> {
        Self::open_with(path, true, true)
    }

    /// `write_index = false` keeps the index in memory only.
    pub fn open_with(path: &Path, humanize: bool, write_index: bool) -> Result<Self> {
        let config_err = |msg: String| Error::Config(format!("triple store {}: {msg}", path.display()));
        let meta = std::fs::metadata(path).map_err(|e| config_err(e.to_string()))?;
        let store_len = meta.len();
        let store_mtime = meta
            .modified()
            .ok()
            .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let idx_path = Self::index_path(path);

        let cached = if write_index && idx_path.exists() {
            std::fs::read(&idx_path)
                .ok()
                .and_then(|b| serde_json::from_slice::<Index>(&b).ok())
                .filter(|i| {
                    i.version == INDEX_VERSION
                        && i.store_len == store_len
                        && i.store_mtime == store_mtime
                })
        } else {
            None
        };
        let index = match cached {
            Some(i) => i,
            None => {
                let mut i = Self::build_index(path, humanize)?;
                i.store_len = store_len;
                i.store_mtime = store_mtime;
                if write_index {
                    match serde_json::to_vec(&i) {
                        Ok(bytes) => {
                            if let Err(e) = std::fs::write(&idx_path, bytes) {
                                warn!("cannot write index {}: {e}", idx_path.display());
                            }
                        }
                        Err(e) => warn!("cannot serialize index: {e}"),
                    }
                }
                i
            }
        };
        let file = File::open(path).map_err(|e| config_err(e.to_string()))?;
        Ok(TripleStore {
            path: path.to_path_buf(),
            humanize,
            index,
            reader: Mutex::new(BufReader::new(file)),
        })
    }

    pub fn index_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".idx");
        PathBuf::from(name)
    }

    fn build_index(path: &Path, humanize: bool) -> Result<Index> {
        let file = File::open(path)
            .map_err(|e| Error::Config(format!("triple store {}: {e}", path.display())))?;
        let mut reader = BufReader::new(file);
        let mut index = Index {
            version: INDEX_VERSION,
            ..Index::default()
        };
        let mut offset = 0u64;
        let mut line = String::new();
        let mut lineno = 0;
        loop {
            line.clear();
            let n = reader
                .read_line(&mut line)
                .map_err(|e| Error::Config(format!("triple store {}: {e}", path.display())))?;
            if n == 0 {
                break;
            }
            lineno += 1;
            match parse_line(&line, humanize) {
                Ok(Some(t)) => {
                    index.by_subject.entry(t.subject).or_default().push(offset);
                    index.by_object.entry(t.object).or_default().push(offset);
                }
                Ok(None) => {}
                Err(msg) => {
                    return Err(Error::Config(format!(
                        "triple store {}:{lineno}: {msg}",
                        path.display()
                    )))
                }
            }
            offset += n as u64;
        }
        Ok(index)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn read_at(&self, offsets: &[u64]) -> Vec<Triple> {
        let mut reader = self.reader.lock();
        let mut out = Vec::with_capacity(offsets.len());
        let mut line = String::new();
        for &off in offsets {
            line.clear();
            if reader.seek(SeekFrom::Start(off)).is_err() {
                continue;
            }
            if reader.by_ref().read_line(&mut line).is_err() {
                continue;
            }
            if let Ok(Some(t)) = parse_line(&line, self.humanize) {
                out.push(t);
            }
        }
        out
    }

    fn with_subject(&self, forms: &[String]) -> Vec<Triple> {
        let mut offsets: Vec<u64> = forms
            .iter()
            .filter_map(|f| self.index.by_subject.get(f))
            .flatten()
            .copied()
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        self.read_at(&offsets)
    }

    fn with_object(&self, forms: &[String]) -> Vec<Triple> {
        let mut offsets: Vec<u64> = forms
            .iter()
            .filter_map(|f| self.index.by_object.get(f))
            .flatten()
            .copied()
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        self.read_at(&offsets)
    }

    /// Predicates of triples linking a surface form of `head` (subject) to
    /// a surface form of `tail` (object), in file order, deduplicated.
    pub fn lookup(&self, head: &Entity, tail: &Entity, source: &str) -> Vec<RelationPhrase> {
        let mut out: Vec<RelationPhrase> = Vec::new();
        for t in self.with_subject(&head.surface_forms) {
            if !tail.surface_forms.contains(&t.object) {
                continue;
            }
            if out.iter().any(|p| p.text == t.predicate) {
                continue;
            }
            if let Some(p) = RelationPhrase::new(&t.predicate, source) {
                out.push(p.with_weight(t.score));
            }
        }
        out
    }

    /// Objects `e` of triples `(anchor, relation, e)`.
    pub fn objects(&self, anchor: &Entity, relation: &str) -> Vec<String> {
        let relation = normalize_phrase(relation);
        self.with_subject(&anchor.surface_forms)
            .into_iter()
            .filter(|t| t.predicate == relation)
            .map(|t| t.object)
            .collect()
    }

    /// Subjects `e` of triples `(e, relation, anchor)`.
    pub fn subjects(&self, anchor: &Entity, relation: &str) -> Vec<String> {
        let relation = normalize_phrase(relation);
        self.with_object(&anchor.surface_forms)
            .into_iter()
            .filter(|t| t.predicate == relation)
            .map(|t| t.subject)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.index.by_subject.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Predicates linking `head` to `tail` in `store`.
pub fn triple_lookup(head: &Entity, tail: &Entity, store: &TripleStore) -> Vec<RelationPhrase> {
    store.lookup(head, tail, "triples")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn store(content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("triples.tsv");
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        (dir, path)
    }

    fn e(name: &str) -> Entity {
        Entity::base(name).unwrap()
    }

    #[test]
    fn direct_hit() {
        let (_d, p) = store("earth\trevolves around\tsun\n");
        let s = TripleStore::open(&p).unwrap();
        let got: Vec<_> = triple_lookup(&e("earth"), &e("sun"), &s)
            .into_iter()
            .map(|r| r.text)
            .collect();
        assert_eq!(got, vec!["revolves around"]);
        assert!(triple_lookup(&e("earth"), &e("moon"), &s).is_empty());
        assert!(TripleStore::index_path(&p).exists());
    }

    #[test]
    fn direction_matters() {
        let (_d, p) = store(
            "earth\trevolves around\tsun\nsun\tattracts\tearth\nsun\twarms\tearths\n",
        );
        let s = TripleStore::open(&p).unwrap();
        let fwd: Vec<_> = s.lookup(&e("earth"), &e("sun"), "x").into_iter().map(|r| r.text).collect();
        let back: Vec<_> = s.lookup(&e("sun"), &e("earth"), "x").into_iter().map(|r| r.text).collect();
        assert_eq!(fwd, vec!["revolves around"]);
        assert_eq!(back, vec!["attracts", "warms"]);
    }

    #[test]
    fn surface_forms_and_scores() {
        let (_d, p) = store("Electrons\torbit\tthe nucleus\t0.8\nelectron\torbit\tnucleus\t0.4\n");
        let s = TripleStore::open(&p).unwrap();
        let got = s.lookup(&e("electrons"), &e("nucleus"), "x");
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].weight_hint, Some(0.4));
    }

    #[test]
    fn entity_queries_filter_on_predicate() {
        let (_d, p) = store("key\topens\tlock\nkey\topens\tdoor\nkey\tfits\tlock\nthief\topens\tlock\n");
        let s = TripleStore::open(&p).unwrap();
        assert_eq!(s.objects(&e("key"), "opens"), vec!["lock", "door"]);
        assert_eq!(s.subjects(&e("lock"), "opens"), vec!["key", "thief"]);
    }

    #[test]
    fn index_reused_and_rebuilt() {
        let (_d, p) = store("a\tb\tc\n");
        let s = TripleStore::open(&p).unwrap();
        assert_eq!(s.len(), 1);
        drop(s);
        let s = TripleStore::open(&p).unwrap();
        assert_eq!(s.len(), 1);
        std::fs::write(&p, "a\tb\tc\nd\te\tf\n").unwrap();
        let s = TripleStore::open(&p).unwrap();
        assert_eq!(s.len(), 2);
        std::fs::write(TripleStore::index_path(&p), b"garbage").unwrap();
        assert_eq!(TripleStore::open(&p).unwrap().len(), 2);
    }

    #[test]
    fn missing_or_corrupt_store_is_config_error() {
        assert!(matches!(
            TripleStore::open(Path::new("/nonexistent/triples.tsv")),
            Err(Error::Config(_))
        ));
        let (_d, p) = store("a\tb\n");
        assert!(matches!(TripleStore::open(&p), Err(Error::Config(_))));
        let (_d, p) = store("a\tb\tc\tnot-a-number\n");
        assert!(matches!(TripleStore::open(&p), Err(Error::Config(_))));
    }

    #[test]
    fn humanizes_graph_predicates() {
        assert_eq!(humanize_predicate("/r/AtLocation"), "at location");
        assert_eq!(humanize_predicate("IsA"), "is a");
        assert_eq!(humanize_predicate("part_of"), "part of");
        let (_d, p) = store("/c/en/sun\t/r/AtLocation\tsky\n");
        let s = TripleStore::open_edge_dump(&p).unwrap();
        assert_eq!(s.len(), 1);
    }
}
