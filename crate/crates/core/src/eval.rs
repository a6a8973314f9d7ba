//! Analogy problem sets and accuracy metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::cardinality::{bijective_space_size, solution_space_size};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{entities, normalize_text, DomainSide, Mapping};
use crate::relations::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Near,
    Far,
    Extended,
    #[default]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyProblem {
    pub id: String,
    pub base: Vec<String>,
    pub target: Vec<String>,
    /// Expected image of each mapped base entity; base entities not listed
    /// are expected to stay unmapped.
    pub gold: BTreeMap<String, String>,
    #[serde(default)]
    pub category: Category,
}

impl AnalogyProblem {
    /// Normalizes names and checks that gold is an injection between the
    /// two domains.
    pub fn validated(mut self) -> Result<Self> {
        self.base = self.base.iter().map(|s| normalize_text(s)).collect();
        self.target = self.target.iter().map(|s| normalize_text(s)).collect();
        self.gold = self
            .gold
            .iter()
            .map(|(b, t)| (normalize_text(b), normalize_text(t)))
            .collect();
        let bad = |msg: String| Err(Error::Input(format!("problem {}: {msg}", self.id)));
        entities(&self.base, DomainSide::Base)?;
        entities(&self.target, DomainSide::Target)?;
        let mut images = std::collections::BTreeSet::new();
        for (b, t) in &self.gold {
            if !self.base.contains(b) {
                return bad(format!("gold key {b:?} is not a base entity"));
            }
            if !self.target.contains(t) {
                return bad(format!("gold value {t:?} is not a target entity"));
            }
            if !images.insert(t) {
                return bad(format!("{t:?} is the gold image of two entities"));
            }
        }
        if self.gold.len() == 1 {
            return bad("gold mapping of size 1".into());
        }
        Ok(self)
    }

    fn gold_pairs(&self) -> Vec<(String, String)> {
        self.gold.iter().map(|(b, t)| (b.clone(), t.clone())).collect()
    }

    fn matches(&self, m: &Mapping) -> bool {
        m.pairs.len() == self.gold.len()
            && m
                .pairs
                .iter()
                .all(|a| self.gold.get(&a.base) == Some(&a.target))
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProblemFile {
    List(Vec<AnalogyProblem>),
    Wrapped { problems: Vec<AnalogyProblem> },
}

/// Parses `A:B::C:D` lines; blank lines and `#` comments are skipped.
pub fn parse_quads(text: &str) -> Result<Vec<AnalogyProblem>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| Error::Parse {
            what: "quad",
            path: "<quads>".into(),
            line: i + 1,
            message: m.to_string(),
        };
        let (left, right) = line.split_once("::").ok_or_else(|| err("expected A:B::C:D"))?;
        let (a, b) = left.split_once(':').ok_or_else(|| err("expected A:B on the left"))?;
        let (c, d) = right.split_once(':').ok_or_else(|| err("expected C:D on the right"))?;
        let p = AnalogyProblem {
            id: format!("quad-{}", out.len() + 1),
            base: vec![a.into(), b.into()],
            target: vec![c.into(), d.into()],
            gold: [(a.into(), c.into()), (b.into(), d.into())].into_iter().collect(),
            category: Category::Custom,
        };
        out.push(p.validated()?);
    }
    Ok(out)
}

/// Loads problems from JSON, YAML (`.yaml`/`.yml`) or a quad text file.
/// JSON and YAML files hold a list of problems or `{problems: [...]}`.
pub fn load_problems(path: &Path) -> Result<Vec<AnalogyProblem>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |message: String| Error::Parse {
        what: "problem file",
        path: path.to_path_buf(),
        line: 0,
        message,
    };
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let file: ProblemFile = match ext {
        "json" => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        "yaml" | "yml" => serde_yaml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        _ => return parse_quads(&text),
    };
    let problems = match file {
        ProblemFile::List(p) | ProblemFile::Wrapped { problems: p } => p,
    };
    let problems: Vec<AnalogyProblem> = problems
        .into_iter()
        .map(AnalogyProblem::validated)
        .collect::<Result<_>>()?;
    let mut ids = std::collections::BTreeSet::new();
    for p in &problems {
        if !ids.insert(&p.id) {
            return Err(Error::Input(format!("duplicate problem id {:?}", p.id)));
        }
    }
    Ok(problems)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuessMode {
    Bijective,
    Relaxed,
}

/// Chance that a uniformly drawn mapping equals gold.
pub fn guess_level(problem: &AnalogyProblem, mode: GuessMode) -> Result<f64> {
    let (n, m) = (problem.base.len(), problem.target.len());
    let size = match mode {
        GuessMode::Bijective => bijective_space_size(n, m)?,
        GuessMode::Relaxed => solution_space_size(n, m)?,
    };
    Ok(1.0 / size as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemStatus {
    Covered,
    Uncovered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemResult {
    pub id: String,
    pub category: Category,
    pub status: ProblemStatus,
    pub predicted: Option<Mapping>,
    /// 1-based position of gold among the ranked mappings.
    pub gold_rank: Option<usize>,
    pub correct_entities: usize,
    pub gold_size: usize,
    pub guess_bijective: f64,
    pub guess_relaxed: f64,
}

impl ProblemResult {
    pub fn perfect(&self) -> bool {
        self.gold_rank == Some(1)
    }

    pub fn in_top(&self, k: usize) -> bool {
        self.gold_rank.is_some_and(|r| r <= k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub problems: usize,
    pub covered: usize,
    pub perfect_accuracy: f64,
    pub per_entity_accuracy: f64,
    pub top2_accuracy: f64,
    pub top3_accuracy: f64,
    pub mean_guess_bijective: f64,
    pub mean_guess_relaxed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub results: Vec<ProblemResult>,
    pub aggregates: Aggregates,
}

/// Metrics of one problem given the ranked mappings produced for it.
pub fn score_problem(problem: &AnalogyProblem, ranked: &[Mapping]) -> Result<ProblemResult> {
    let gold_rank = ranked.iter().position(|m| problem.matches(m)).map(|i| i + 1);
    let predicted = ranked.first().cloned();
    let correct_entities = predicted.as_ref().map_or(0, |m| {
        problem
            .gold_pairs()
            .iter()
            .filter(|(b, t)| m.image(b) == Some(t.as_str()))
            .count()
    });
    Ok(ProblemResult {
        id: problem.id.clone(),
        category: problem.category,
        status: ProblemStatus::Covered,
        predicted,
        gold_rank,
        correct_entities,
        gold_size: problem.gold.len(),
        guess_bijective: guess_level(problem, GuessMode::Bijective)?,
        guess_relaxed: guess_level(problem, GuessMode::Relaxed)?,
    })
}

/// Aggregates over covered problems; guess levels over all problems.
pub fn aggregate(results: &[ProblemResult]) -> Aggregates {
    let covered: Vec<&ProblemResult> = results
        .iter()
        .filter(|r| r.status == ProblemStatus::Covered)
        .collect();
    let frac = |k: usize| {
        if covered.is_empty() {
            0.0
        } else {
            covered.iter().filter(|r| r.in_top(k)).count() as f64 / covered.len() as f64
        }
    };
    let gold_total: usize = covered.iter().map(|r| r.gold_size).sum();
    let correct: usize = covered.iter().map(|r| r.correct_entities).sum();
    let mean = |f: fn(&ProblemResult) -> f64| {
        if results.is_empty() {
            0.0
        } else {
            results.iter().map(f).sum::<f64>() / results.len() as f64
        }
    };
    Aggregates {
        problems: results.len(),
        covered: covered.len(),
        perfect_accuracy: frac(1),
        per_entity_accuracy: if gold_total == 0 {
            0.0
        } else {
            correct as f64 / gold_total as f64
        },
        top2_accuracy: frac(2),
        top3_accuracy: frac(3),
        mean_guess_bijective: mean(|r| r.guess_bijective),
        mean_guess_relaxed: mean(|r| r.guess_relaxed),
    }
}

/// Runs every problem through `engine`. Offline, a problem naming an
/// entity the snapshot never mentions is marked uncovered.
pub fn evaluate(problems: &[AnalogyProblem], engine: &Engine) -> Result<EvalReport> {
    let results: Vec<ProblemResult> = problems
        .par_iter()
        .map(|p| {
            let missing: Vec<&String> = p
                .base
                .iter()
                .chain(&p.target)
                .filter(|n| !engine.snapshot().mentions(n))
                .collect();
            if engine.mode() == Mode::Offline && !missing.is_empty() {
                warn!("problem {} uncovered by the snapshot: {missing:?}", p.id);
                return Ok(ProblemResult {
                    id: p.id.clone(),
                    category: p.category,
                    status: ProblemStatus::Uncovered,
                    predicted: None,
                    gold_rank: None,
                    correct_entities: 0,
                    gold_size: p.gold.len(),
                    guess_bijective: guess_level(p, GuessMode::Bijective)?,
                    guess_relaxed: guess_level(p, GuessMode::Relaxed)?,
                });
            }
            let out = engine.map_names(&p.base, &p.target)?;
            score_problem(p, &out.mappings)
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        aggregates: aggregate(&results),
        results,
    })
}

/// Reports with each listed source left out in turn.
pub fn ablate(
    problems: &[AnalogyProblem],
    engine: &Engine,
    source_ids: &[String],
) -> Result<Vec<(String, EvalReport)>> {
    source_ids
        .iter()
        .map(|id| {
            if !engine.sources().iter().any(|s| &s.id == id) {
                return Err(Error::Config(format!("cannot ablate unknown source {id:?}")));
            }
            Ok((id.clone(), evaluate(problems, &engine.without_source(id))?))
        })
        .collect()
}

/// Plain-text table of a report.
pub fn render_table(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<20} {:<9} {:>7} {:>5} {:>9}", "problem", "category", "entity", "rank", "status");
    for r in &report.results {
        let cat = format!("{:?}", r.category).to_lowercase();
        let rank = r.gold_rank.map_or("-".to_string(), |x| x.to_string());
        let status = match r.status {
            ProblemStatus::Covered if r.perfect() => "perfect",
            ProblemStatus::Covered => "wrong",
            ProblemStatus::Uncovered => "uncovered",
        };
        let _ = writeln!(
            s,
            "{:<20} {:<9} {:>3}/{:<3} {:>5} {:>9}",
            r.id, cat, r.correct_entities, r.gold_size, rank, status
        );
    }
    let a = &report.aggregates;
    let _ = writeln!(s);
    let _ = writeln!(s, "covered            {}/{}", a.covered, a.problems);
    let _ = writeln!(s, "perfect            {:.4}", a.perfect_accuracy);
    let _ = writeln!(s, "per-entity         {:.4}", a.per_entity_accuracy);
    let _ = writeln!(s, "top-2              {:.4}", a.top2_accuracy);
    let _ = writeln!(s, "top-3              {:.4}", a.top3_accuracy);
    let _ = writeln!(s, "guess (bijective)  {:.4}", a.mean_guess_bijective);
    let _ = writeln!(s, "guess (relaxed)    {:.4}", a.mean_guess_relaxed);
    s
}
