//! Shared vocabulary: entities, relation phrases, relation sets, scored
//! pair correspondences and mappings.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the analogy an entity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSide {
    Base,
    Target,
}

/// Lowercases, trims and collapses internal whitespace.
pub fn normalize_text(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Phrase normalization: [`normalize_text`] plus stripping punctuation at
/// both edges.
pub fn normalize_phrase(raw: &str) -> String {
    let lowered = normalize_text(raw);
    lowered
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// A named participant of one domain.
///
/// Identity is the normalized name; the side tag and surface forms do not
/// take part in equality or ordering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub surface_forms: Vec<String>,
    pub side: DomainSide,
}

impl Entity {
    /// Normalizes `raw` into an entity on `side`.
    pub fn new(raw: &str, side: DomainSide) -> Result<Self> {
        let name = normalize_text(raw);
        if name.is_empty() {
            return Err(Error::InvalidEntity(raw.to_string()));
        }
        let mut surface_forms = vec![name.clone()];
        for variant in number_variants(&name) {
            if !surface_forms.contains(&variant) {
                surface_forms.push(variant);
            }
        }
        Ok(Entity {
            name,
            surface_forms,
            side,
        })
    }

    pub fn base(raw: &str) -> Result<Self> {
        Self::new(raw, DomainSide::Base)
    }

    pub fn target(raw: &str) -> Result<Self> {
        Self::new(raw, DomainSide::Target)
    }
}

/// Normalizes a raw entity name. The result is tagged as a base entity;
/// use [`Entity::new`] to choose the side.
pub fn normalize_entity(raw: &str) -> Result<Entity> {
    Entity::base(raw)
}

/// Naive singular/plural variants of the last word of `name`.
fn number_variants(name: &str) -> Vec<String> {
    let (head, last) = match name.rsplit_once(' ') {
        Some((head, last)) => (Some(head), last),
        None => (None, name),
    };
    let variant = if last.ends_with("ss") {
        format!("{last}es")
    } else if let Some(stem) = last.strip_suffix('s') {
        if stem.is_empty() {
            return Vec::new();
        }
        stem.to_string()
    } else if ["x", "z", "ch", "sh"].iter().any(|s| last.ends_with(s)) {
        format!("{last}es")
    } else {
        format!("{last}s")
    };
    let full = match head {
        Some(head) => format!("{head} {variant}"),
        None => variant,
    };
    vec![full]
}

impl PartialEq for Entity {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Entity {}

impl Hash for Entity {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

impl PartialOrd for Entity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entity {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Builds one domain's entity list, rejecting duplicate normalized names.
pub fn entities<S: AsRef<str>>(raw: &[S], side: DomainSide) -> Result<Vec<Entity>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for r in raw {
        let e = Entity::new(r.as_ref(), side)?;
        if !seen.insert(e.name.clone()) {
            return Err(Error::Input(format!(
                "duplicate {} entity {:?}",
                match side {
                    DomainSide::Base => "base",
                    DomainSide::Target => "target",
                },
                e.name
            )));
        }
        out.push(e);
    }
    Ok(out)
}

/// A short predicate phrase holding between an ordered entity pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationPhrase {
    pub text: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_hint: Option<f64>,
}

impl RelationPhrase {
    /// Normalizes `text`; returns `None` when nothing is left.
    pub fn new(text: &str, source: &str) -> Option<Self> {
        let text = normalize_phrase(text);
        if text.is_empty() {
            return None;
        }
        Some(RelationPhrase {
            text,
            source: source.to_string(),
            weight_hint: None,
        })
    }

    pub fn with_weight(mut self, weight: Option<f64>) -> Self {
        self.weight_hint = weight.filter(|w| w.is_finite() && *w >= 0.0);
        self
    }
}

/// Relations extracted for one directed entity pair.
///
/// Phrases are kept sorted by text and unique; when two sources yield the
/// same text the one with the smaller source id is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSet {
    pub head: String,
    pub tail: String,
    pub relations: Vec<RelationPhrase>,
}

impl RelationSet {
    pub fn new(head: &str, tail: &str) -> Result<Self> {
        if head == tail {
            return Err(Error::Input(format!(
                "relation set needs two distinct entities, got {head:?} twice"
            )));
        }
        Ok(RelationSet {
            head: head.to_string(),
            tail: tail.to_string(),
            relations: Vec::new(),
        })
    }

    pub fn from_phrases(
        head: &str,
        tail: &str,
        phrases: impl IntoIterator<Item = RelationPhrase>,
    ) -> Result<Self> {
        let mut set = Self::new(head, tail)?;
        set.extend(phrases);
        Ok(set)
    }

    pub fn extend(&mut self, phrases: impl IntoIterator<Item = RelationPhrase>) {
        for p in phrases {
            self.insert(p);
        }
    }

    pub fn insert(&mut self, phrase: RelationPhrase) {
        match self
            .relations
            .binary_search_by(|r| r.text.as_str().cmp(&phrase.text))
        {
            Ok(i) => {
                if phrase.source < self.relations[i].source {
                    self.relations[i] = phrase;
                }
            }
            Err(i) => self.relations.insert(i, phrase),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(|r| r.text.as_str())
    }
}

/// Which of the two directed relation sets an evidence block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairDirection {
    /// `R(b1, b2)` against `R(t1, t2)`.
    Forward,
    /// `R(b2, b1)` against `R(t2, t1)`.
    Backward,
}

/// One retained edge of a cluster matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedEdge {
    pub base_label: String,
    pub target_label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEvidence {
    pub direction: PairDirection,
    pub edges: Vec<MatchedEdge>,
}

impl DirectionEvidence {
    pub fn total(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Scored correspondence between a base pair and a target pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    pub base_pair: (String, String),
    pub target_pair: (String, String),
    pub score: f64,
    pub evidence: Vec<DirectionEvidence>,
}

/// A single `base -> target` assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub base: String,
    pub target: String,
}

/// A partial injective mapping from base entities into target entities.
///
/// Base entities missing from `pairs` map to nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub pairs: Vec<Assignment>,
    pub unmapped_base: Vec<String>,
    pub unmapped_target: Vec<String>,
    pub total_score: f64,
}

impl Mapping {
    /// Validates `pairs` against the two domains and fills in the unmapped
    /// sides. Pairs are stored sorted by base name.
    pub fn new(
        pairs: impl IntoIterator<Item = (String, String)>,
        base: &[Entity],
        target: &[Entity],
        total_score: f64,
    ) -> Result<Self> {
        let mut pairs: Vec<Assignment> = pairs
            .into_iter()
            .map(|(base, target)| Assignment { base, target })
            .collect();
        pairs.sort();
        let mapping_err = |msg: String| Err(Error::Input(msg));
        if pairs.len() == 1 {
            return mapping_err("mappings of size 1 are not allowed".into());
        }
        let mut used_base = BTreeSet::new();
        let mut used_target = BTreeSet::new();
        for a in &pairs {
            if !base.iter().any(|e| e.name == a.base) {
                return mapping_err(format!("{:?} is not a base entity", a.base));
            }
            if !target.iter().any(|e| e.name == a.target) {
                return mapping_err(format!("{:?} is not a target entity", a.target));
            }
            if !used_base.insert(a.base.as_str()) {
                return mapping_err(format!("{:?} is mapped twice", a.base));
            }
            if !used_target.insert(a.target.as_str()) {
                return mapping_err(format!("{:?} is the image of two entities", a.target));
            }
        }
        let unmapped_base = base
            .iter()
            .filter(|e| !used_base.contains(e.name.as_str()))
            .map(|e| e.name.clone())
            .collect();
        let unmapped_target = target
            .iter()
            .filter(|e| !used_target.contains(e.name.as_str()))
            .map(|e| e.name.clone())
            .collect();
        Ok(Mapping {
            pairs,
            unmapped_base,
            unmapped_target,
            total_score,
        })
    }

    pub fn empty(base: &[Entity], target: &[Entity]) -> Self {
        Mapping {
            pairs: Vec::new(),
            unmapped_base: base.iter().map(|e| e.name.clone()).collect(),
            unmapped_target: target.iter().map(|e| e.name.clone()).collect(),
            total_score: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn image(&self, base: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|a| a.base == base)
            .map(|a| a.target.as_str())
    }

    /// True when the assignment sets are equal (scores are ignored).
    pub fn same_assignments(&self, other: &Mapping) -> bool {
        self.pairs == other.pairs
    }

    /// Checks injectivity, functionality and the size-1 exclusion.
    pub fn is_valid(&self) -> bool {
        if self.pairs.len() == 1 {
            return false;
        }
        let mut b = BTreeSet::new();
        let mut t = BTreeSet::new();
        self.pairs
            .iter()
            .all(|a| b.insert(&a.base) && t.insert(&a.target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_trailing_whitespace_and_case() {
        let e = normalize_entity("Earth ").unwrap();
        assert_eq!(e.name, "earth");
        assert_eq!(e.surface_forms, vec!["earth", "earths"]);
    }

    #[test]
    fn strips_plural_s() {
        let e = normalize_entity("electrons").unwrap();
        assert_eq!(e.surface_forms, vec!["electrons", "electron"]);
    }

    #[test]
    fn rejects_blank_names() {
        assert!(matches!(normalize_entity(""), Err(Error::InvalidEntity(_))));
        assert!(matches!(normalize_entity(" \t "), Err(Error::InvalidEntity(_))));
    }

    #[test]
    fn multiword_variants_touch_last_word() {
        let e = normalize_entity("Solar   System").unwrap();
        assert_eq!(e.name, "solar system");
        assert_eq!(e.surface_forms, vec!["solar system", "solar systems"]);
        let e = normalize_entity("glass").unwrap();
        assert_eq!(e.surface_forms, vec!["glass", "glasses"]);
        let e = normalize_entity("box").unwrap();
        assert_eq!(e.surface_forms, vec!["box", "boxes"]);
    }

    #[test]
    fn equality_ignores_case_and_side() {
        assert_eq!(Entity::base("Sun").unwrap(), Entity::target(" sun").unwrap());
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(entities(&["Sun", "sun "], DomainSide::Base).is_err());
    }

    #[test]
    fn relation_set_dedups_and_sorts() {
        let mut set = RelationSet::new("earth", "sun").unwrap();
        set.insert(RelationPhrase::new("Orbit.", "b").unwrap());
        set.insert(RelationPhrase::new("far from", "a").unwrap());
        set.insert(RelationPhrase::new("orbit", "a").unwrap());
        let texts: Vec<_> = set.texts().collect();
        assert_eq!(texts, vec!["far from", "orbit"]);
        assert_eq!(set.relations[1].source, "a");
        assert!(RelationSet::new("sun", "sun").is_err());
    }

    #[test]
    fn mapping_rejects_size_one_and_collisions() {
        let base = entities(&["a", "b"], DomainSide::Base).unwrap();
        let target = entities(&["x", "y"], DomainSide::Target).unwrap();
        let one = Mapping::new([("a".into(), "x".into())], &base, &target, 0.0);
        assert!(one.is_err());
        let clash = Mapping::new(
            [("a".into(), "x".into()), ("b".into(), "x".into())],
            &base,
            &target,
            0.0,
        );
        assert!(clash.is_err());
        let ok = Mapping::new(
            [("b".into(), "y".into()), ("a".into(), "x".into())],
            &base,
            &target,
            1.0,
        )
        .unwrap();
        assert_eq!(ok.pairs[0].base, "a");
        assert!(ok.unmapped_base.is_empty());
        assert!(ok.is_valid());
    }

    proptest::proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "[A-Za-z ]{1,24}") {
            if let Ok(e) = normalize_entity(&raw) {
                let again = normalize_entity(&e.name).unwrap();
                proptest::prop_assert_eq!(again.name, e.name.clone());
                proptest::prop_assert!(e.surface_forms.contains(&e.name));
            }
        }
    }
}
