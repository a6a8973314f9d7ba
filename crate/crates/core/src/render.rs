//! Text and Graphviz renderings of engine output.

use std::fmt::Write as _;

use crate::engine::MapOutcome;
use crate::model::{Assignment, MatchedEdge, PairDirection};
use crate::scoring::QuadrupleExplanation;
use crate::suggest::SuggestOutcome;

/// Relations shown on a DOT edge label, per direction.
pub const DOT_RELATIONS_PER_EDGE: usize = 2;

fn node_id(a: &Assignment) -> String {
    format!("{}→{}", a.base, a.target)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn edge_text(e: &MatchedEdge) -> String {
    if e.base_label == e.target_label {
        e.base_label.clone()
    } else {
        format!("{} ~ {}", e.base_label, e.target_label)
    }
}

/// Ranked mappings, at most `limit`, followed by the evidence of the best.
pub fn mapping_text(out: &MapOutcome, limit: usize) -> String {
    let mut s = String::new();
    for (rank, m) in out.mappings.iter().take(limit).enumerate() {
        let _ = writeln!(s, "#{} score {:.4}", rank + 1, m.total_score);
        for a in &m.pairs {
            let _ = writeln!(s, "  {} -> {}", a.base, a.target);
        }
        for b in &m.unmapped_base {
            let _ = writeln!(s, "  {b} -> (unmapped)");
        }
    }
    if !out.evidence.is_empty() {
        let _ = writeln!(s, "evidence:");
    }
    for p in &out.evidence {
        let _ = writeln!(
            s,
            "  ({}, {}) ~ ({}, {}) {:.4}",
            p.base_pair.0, p.base_pair.1, p.target_pair.0, p.target_pair.1, p.score
        );
        for d in &p.evidence {
            for e in &d.edges {
                let dir = match d.direction {
                    PairDirection::Forward => "->",
                    PairDirection::Backward => "<-",
                };
                let _ = writeln!(s, "    {dir} {} {:.4}", edge_text(e), e.weight);
            }
        }
    }
    s
}

/// Graph of the best mapping: one node per assignment, one directed edge
/// per direction of each scored pair of assignments. Edge labels list the
/// strongest shared relations; pen width grows with the edge score.
pub fn mapping_dot(out: &MapOutcome) -> String {
    let mut s = String::from("digraph mapping {\n  rankdir=LR;\n  node [shape=box];\n");
    let Some(best) = out.best() else {
        s.push_str("}\n");
        return s;
    };
    for a in &best.pairs {
        let _ = writeln!(s, "  {};", quote(&node_id(a)));
    }
    let max = out
        .evidence
        .iter()
        .flat_map(|p| p.evidence.iter().map(|d| d.total()))
        .fold(0.0, f64::max);
    let find = |b: &str| best.pairs.iter().find(|a| a.base == b).expect("mapped");
    for p in &out.evidence {
        let first = find(&p.base_pair.0);
        let second = find(&p.base_pair.1);
        for d in &p.evidence {
            if d.edges.is_empty() {
                continue;
            }
            let (from, to) = match d.direction {
                PairDirection::Forward => (first, second),
                PairDirection::Backward => (second, first),
            };
            let mut edges: Vec<&MatchedEdge> = d.edges.iter().collect();
            edges.sort_by(|a, b| b.weight.total_cmp(&a.weight));
            let mut label: Vec<String> = edges
                .iter()
                .take(DOT_RELATIONS_PER_EDGE)
                .map(|e| edge_text(e))
                .collect();
            label.push(format!("{:.2}", d.total()));
            let width = if max > 0.0 { 1.0 + 4.0 * d.total() / max } else { 1.0 };
            let _ = writeln!(
                s,
                "  {} -> {} [label={}, penwidth={:.2}];",
                quote(&node_id(from)),
                quote(&node_id(to)),
                quote(&label.join("\n")),
                width
            );
        }
    }
    s.push_str("}\n");
    s
}

/// Clusters, graph edges and matching behind one quadruple.
pub fn explain_text(x: &QuadrupleExplanation) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "({}, {}) ~ ({}, {}) score {:.4}",
        x.base_pair.0, x.base_pair.1, x.target_pair.0, x.target_pair.1, x.score
    );
    for d in &x.directions {
        let _ = writeln!(
            s,
            "{:?}: R({}, {}) vs R({}, {}) score {:.4}",
            d.direction,
            d.base_relations.0,
            d.base_relations.1,
            d.target_relations.0,
            d.target_relations.1,
            d.score
        );
        for (name, clusters) in [("base", &d.graph.base_clusters), ("target", &d.graph.target_clusters)] {
            for c in clusters {
                let members: Vec<&str> = c.members.iter().map(|m| m.text.as_str()).collect();
                let _ = writeln!(s, "  {name} cluster [{}] rep {:?}", members.join(", "), c.representative);
            }
        }
        for e in &d.matching {
            let kept = d.retained.contains(e);
            let _ = writeln!(
                s,
                "  match {:?} ~ {:?} {:.4}{}",
                e.base_label,
                e.target_label,
                e.weight,
                if kept { "" } else { " (dropped)" }
            );
        }
    }
    s
}

/// Ranked suggestion clusters.
pub fn suggest_text(out: &SuggestOutcome) -> String {
    let mut s = String::new();
    if out.candidates.is_empty() {
        let _ = writeln!(s, "no suggestions ({} names harvested)", out.harvested.len());
    }
    for (rank, c) in out.candidates.iter().enumerate() {
        let _ = writeln!(
            s,
            "#{} {} score {:.4} cluster [{}] rep {}",
            rank + 1,
            c.best_member,
            c.score,
            c.cluster_members.join(", "),
            c.representative
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{entities, DomainSide, DirectionEvidence, Mapping, PairSimilarity};

    fn outcome() -> MapOutcome {
        let b = entities(&["sun", "earth"], DomainSide::Base).unwrap();
        let t = entities(&["nucleus", "electron"], DomainSide::Target).unwrap();
        let m = Mapping::new(
            [("sun".to_string(), "nucleus".to_string()), ("earth".to_string(), "electron".to_string())],
            &b,
            &t,
            1.5,
        )
        .unwrap();
        let edge = |l: &str, w: f64| MatchedEdge {
            base_label: l.into(),
            target_label: l.into(),
            weight: w,
        };
        MapOutcome {
            base: vec!["sun".into(), "earth".into()],
            target: vec!["nucleus".into(), "electron".into()],
            mappings: vec![m],
            evidence: vec![PairSimilarity {
                base_pair: ("earth".into(), "sun".into()),
                target_pair: ("electron".into(), "nucleus".into()),
                score: 1.5,
                evidence: vec![
                    DirectionEvidence {
                        direction: PairDirection::Forward,
                        edges: vec![edge("orbit", 0.25), edge("revolve around", 0.75), edge("circle", 0.5)],
                    },
                    DirectionEvidence {
                        direction: PairDirection::Backward,
                        edges: vec![],
                    },
                ],
            }],
            warnings: vec![],
            embedding_warnings: vec![],
        }
    }

    #[test]
    fn dot_has_assignment_nodes_and_top_two_relations() {
        let dot = mapping_dot(&outcome());
        assert!(dot.contains("\"sun→nucleus\";"));
        assert!(dot.contains("\"earth→electron\";"));
        assert!(dot.contains("\"earth→electron\" -> \"sun→nucleus\""));
        assert!(dot.contains("label=\"revolve around\\ncircle\\n1.50\""));
        assert!(!dot.contains("orbit"));
        assert!(dot.contains("penwidth=5.00"));
        assert_eq!(dot.matches("->").count(), 1);
    }

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote("a\"b\\c"), "\"a\\\"b\\\\c\"");
    }

    #[test]
    fn text_lists_ranked_mappings() {
        let t = mapping_text(&outcome(), 5);
        assert!(t.starts_with("#1 score 1.5000\n"));
        assert!(t.contains("  sun -> nucleus\n"));
        assert!(t.contains("-> revolve around 0.7500"));
    }
}
