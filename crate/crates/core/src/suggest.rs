//! Proposes a target entity for a base entity left without an image.
//!
//! Relations linking the unmapped entity to its mapped neighbours are
//! replayed on the target side (`(M(b_i), r, ?)` and `(?, r, M(b_i))`), the
//! harvested names are clustered, and every cluster is tried by rerunning
//! the mapping with its representative added to the target domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{normalize_text, DomainSide, Entity, Mapping};
use crate::relations::{related_entities, QueryDirection, SourceWarning};
use crate::scoring::{agglomerate, closest_to_centroid};
use crate::similarity::{cosine, Embedding};

/// Raw harvested names kept per unmapped entity.
pub const HARVEST_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionCandidate {
    /// Harvested names in the cluster, repeats included, sorted.
    pub cluster_members: Vec<String>,
    pub representative: String,
    /// The member proposed for the slot. For the top cluster this is the
    /// member with the best rerun; for the others it is the representative.
    pub best_member: String,
    pub best_mapping: Mapping,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestOutcome {
    pub harvested: Vec<String>,
    pub candidates: Vec<SuggestionCandidate>,
    pub warnings: Vec<SourceWarning>,
}

fn check_inputs(b_unmapped: &Entity, mapping: &Mapping) -> Result<()> {
    if !mapping.unmapped_base.contains(&b_unmapped.name) {
        return Err(Error::Input(format!(
            "{:?} is not an unmapped base entity of the mapping",
            b_unmapped.name
        )));
    }
    if mapping.is_empty() {
        return Err(Error::Input("cannot suggest from an empty mapping".into()));
    }
    Ok(())
}

/// Names related to the images of `b_unmapped`'s mapped neighbours through
/// the relations linking them, in harvest order, repeats kept.
pub fn harvest_candidates(
    engine: &Engine,
    b_unmapped: &Entity,
    mapping: &Mapping,
    base: &[Entity],
    target: &[Entity],
) -> Result<(Vec<String>, Vec<SourceWarning>)> {
    check_inputs(b_unmapped, mapping)?;
    let index = engine.relations(base, &[]);
    let mut names = Vec::new();
    let mut warnings = Vec::new();
    let excluded = |n: &str| target.iter().any(|t| t.name == n);
    'outer: for a in &mapping.pairs {
        let anchor = Entity::new(&a.target, DomainSide::Target)?;
        let queries = index
            .texts(&a.base, &b_unmapped.name)
            .into_iter()
            .map(|r| (r.to_string(), QueryDirection::Forward))
            .chain(
                index
                    .texts(&b_unmapped.name, &a.base)
                    .into_iter()
                    .map(|r| (r.to_string(), QueryDirection::Backward)),
            )
            .collect::<Vec<_>>();
        for (relation, direction) in queries {
            let (found, w) = related_entities(
                &anchor,
                &relation,
                direction,
                engine.sources(),
                engine.snapshot(),
                engine.mode(),
            );
            warnings.extend(w);
            for n in found {
                let n = normalize_text(&n);
                if n.is_empty() || excluded(&n) {
                    continue;
                }
                names.push(n);
                if names.len() == HARVEST_CAP {
                    break 'outer;
                }
            }
        }
    }
    warnings.sort();
    warnings.dedup();
    Ok((names, warnings))
}

/// Clusters of harvested names with at least two members, each as
/// `(members, representative)`, ordered by representative.
pub fn cluster_names(engine: &Engine, names: &[String]) -> Result<Vec<(Vec<String>, String)>> {
    let mut sorted = names.to_vec();
    sorted.sort();
    if sorted.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<&str> = sorted.iter().map(String::as_str).collect();
    let vectors: Vec<Embedding> = engine
        .provider()
        .embed_batch(&texts)
        .into_iter()
        .collect::<Result<_>>()?;
    let n = texts.len();
    let mut sims = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sims[i][j] = if texts[i] == texts[j] {
                1.0
            } else {
                cosine(&vectors[i], &vectors[j])
            };
        }
    }
    let refs: Vec<Option<&[f64]>> = vectors.iter().map(|v| Some(&v[..])).collect();
    let rep = |m: &[usize]| closest_to_centroid(&refs, m);
    let threshold = engine.search_config().cluster_threshold;
    Ok(agglomerate(&sims, &texts, threshold, &rep)
        .into_iter()
        .filter(|(members, _)| members.len() >= 2)
        .map(|(members, r)| {
            (
                members.iter().map(|&i| texts[i].to_string()).collect(),
                texts[r].to_string(),
            )
        })
        .collect())
}

/// Best ranked mapping that sends `b_unmapped` to `candidate` once the
/// candidate joins the target domain.
fn rerun(
    engine: &Engine,
    base: &[Entity],
    target: &[Entity],
    b_unmapped: &Entity,
    candidate: &str,
) -> Result<Option<Mapping>> {
    let mut t = target.to_vec();
    t.push(Entity::new(candidate, DomainSide::Target)?);
    let out = engine.map(base, &t)?;
    Ok(out
        .mappings
        .into_iter()
        .find(|m| m.image(&b_unmapped.name) == Some(candidate)))
}

/// Ranked suggestions for the slot of `b_unmapped`. An empty candidate
/// list means nothing survived filtering.
pub fn suggest(
    engine: &Engine,
    b_unmapped: &Entity,
    mapping: &Mapping,
    base: &[Entity],
    target: &[Entity],
) -> Result<SuggestOutcome> {
    let (harvested, warnings) = harvest_candidates(engine, b_unmapped, mapping, base, target)?;
    let clusters = cluster_names(engine, &harvested)?;
    let tried: Vec<Option<SuggestionCandidate>> = clusters
        .par_iter()
        .map(|(members, rep)| {
            Ok(rerun(engine, base, target, b_unmapped, rep)?.map(|m| SuggestionCandidate {
                cluster_members: members.clone(),
                representative: rep.clone(),
                best_member: rep.clone(),
                score: m.total_score,
                best_mapping: m,
            }))
        })
        .collect::<Result<_>>()?;
    let mut candidates: Vec<SuggestionCandidate> = tried.into_iter().flatten().collect();
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.representative.cmp(&b.representative))
    });

    if let Some(top) = candidates.first_mut() {
        let mut distinct = top.cluster_members.clone();
        distinct.dedup();
        let reruns: Vec<(String, Option<Mapping>)> = distinct
            .par_iter()
            .map(|name| Ok((name.clone(), rerun(engine, base, target, b_unmapped, name)?)))
            .collect::<Result<_>>()?;
        for (name, m) in reruns {
            if let Some(m) = m {
                if m.total_score > top.score || (m.total_score == top.score && name < top.best_member) {
                    top.best_member = name;
                    top.score = m.total_score;
                    top.best_mapping = m;
                }
            }
        }
    }
    Ok(SuggestOutcome {
        harvested,
        candidates,
        warnings,
    })
}
