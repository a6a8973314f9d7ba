use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{objective_indices, PairTable};
use crate::scoring::ScoringParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub beam_width: usize,
    pub top_k_clusters: usize,
    pub sim_threshold: f64,
    pub cluster_threshold: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let s = ScoringParams::default();
        SearchConfig {
            beam_width: 20,
            top_k_clusters: s.top_k,
            sim_threshold: s.sim_threshold,
            cluster_threshold: s.cluster_threshold,
        }
    }
}

impl SearchConfig {
    pub fn scoring(&self) -> ScoringParams {
        ScoringParams {
            sim_threshold: self.sim_threshold,
            cluster_threshold: self.cluster_threshold,
            top_k: self.top_k_clusters,
        }
    }
}

/// A partial mapping inside the beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamState {
    /// `(base index, target index)`, sorted by base index.
    pub assignments: Vec<(usize, usize)>,
    /// Score accumulated through increments.
    pub frontier_score: f64,
    /// Objective recomputed from scratch; used for ranking.
    pub score: f64,
    /// Assignments in the order they were added.
    pub history: Vec<(usize, usize)>,
}

impl BeamState {
    fn empty() -> Self {
        BeamState {
            assignments: Vec::new(),
            frontier_score: 0.0,
            score: 0.0,
            history: Vec::new(),
        }
    }

    fn extend(&self, added: &[(usize, usize)], increment: f64, table: &PairTable) -> Self {
        let mut assignments = self.assignments.clone();
        assignments.extend_from_slice(added);
        assignments.sort_unstable();
        let mut history = self.history.clone();
        history.extend_from_slice(added);
        BeamState {
            score: objective_indices(&assignments, table),
            assignments,
            frontier_score: self.frontier_score + increment,
            history,
        }
    }
}

/// Beam contents after each iteration, starting with the seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BeamTrace {
    pub iterations: Vec<Vec<BeamState>>,
}

/// Name ranks used for lexicographic tie-breaking.
struct Ranks {
    base: Vec<usize>,
    target: Vec<usize>,
}

impl Ranks {
    fn new(table: &PairTable) -> Self {
        let rank = |names: &[String]| {
            let mut order: Vec<usize> = (0..names.len()).collect();
            order.sort_by(|&a, &b| names[a].cmp(&names[b]));
            let mut r = vec![0; names.len()];
            for (pos, i) in order.into_iter().enumerate() {
                r[i] = pos;
            }
            r
        };
        Ranks {
            base: rank(table.base()),
            target: rank(table.target()),
        }
    }

    fn key(&self, s: &BeamState) -> Vec<(usize, usize)> {
        let mut k: Vec<(usize, usize)> = s
            .assignments
            .iter()
            .map(|&(i, t)| (self.base[i], self.target[t]))
            .collect();
        k.sort_unstable();
        k
    }

    fn compare(&self, a: &BeamState, b: &BeamState) -> Ordering {
        b.score
            .total_cmp(&a.score)
            .then(a.assignments.len().cmp(&b.assignments.len()))
            .then_with(|| self.key(a).cmp(&self.key(b)))
    }
}

/// All strictly improving extensions of `state`: one new assignment tied
/// to the mapped entities, or a new pair-mapping with positive `sim*`.
fn extensions(state: &BeamState, table: &PairTable) -> Vec<BeamState> {
    let (n, m) = (table.base().len(), table.target().len());
    let mut used_b = vec![false; n];
    let mut used_t = vec![false; m];
    for &(i, k) in &state.assignments {
        used_b[i] = true;
        used_t[k] = true;
    }
    let tie = |i: usize, k: usize| -> f64 {
        state
            .assignments
            .iter()
            .map(|&(j, p)| table.score(j, i, p, k))
            .sum()
    };
    let mut out = Vec::new();
    if !state.assignments.is_empty() {
        for i in (0..n).filter(|&i| !used_b[i]) {
            for k in (0..m).filter(|&k| !used_t[k]) {
                let inc = tie(i, k);
                if inc > 0.0 {
                    out.push(state.extend(&[(i, k)], inc, table));
                }
            }
        }
    }
    for i in (0..n).filter(|&i| !used_b[i]) {
        for j in (i + 1..n).filter(|&j| !used_b[j]) {
            for k in (0..m).filter(|&k| !used_t[k]) {
                for p in (0..m).filter(|&p| p != k && !used_t[p]) {
                    let own = table.score(i, j, k, p);
                    if own <= 0.0 {
                        continue;
                    }
                    let inc = own + tie(i, k) + tie(j, p);
                    out.push(state.extend(&[(i, k), (j, p)], inc, table));
                }
            }
        }
    }
    out
}

/// Ranked mappings found by beam search, best first. Returns a single
/// empty state when no pair-mapping scores above zero.
pub fn beam_search(table: &PairTable, beam_width: usize) -> Vec<BeamState> {
    beam_search_traced(table, beam_width).0
}

/// [`beam_search`] that also records the beam after every iteration.
///
/// The beam starts from the best `beam_width` pair-mappings. Each iteration
/// pools the current beam with all strictly improving extensions of its
/// states, merges states with equal assignment sets, and keeps the best
/// `beam_width` by score, then size, then assignment names. The search
/// stops when the beam no longer changes.
pub fn beam_search_traced(table: &PairTable, beam_width: usize) -> (Vec<BeamState>, BeamTrace) {
    let width = beam_width.max(1);
    let ranks = Ranks::new(table);
    let mut trace = BeamTrace::default();
    let mut beam: Vec<BeamState> = vec![BeamState::empty()];
    loop {
        let grown: Vec<Vec<BeamState>> = beam.par_iter().map(|s| extensions(s, table)).collect();
        if grown.iter().all(Vec::is_empty) {
            break;
        }
        let mut pool: Vec<BeamState> = beam
            .iter()
            .filter(|s| !s.assignments.is_empty())
            .cloned()
            .chain(grown.into_iter().flatten())
            .collect();
        pool.sort_by(|a, b| ranks.compare(a, b));
        let mut seen = HashSet::new();
        let next: Vec<BeamState> = pool
            .into_iter()
            .filter(|s| seen.insert(s.assignments.clone()))
            .take(width)
            .collect();
        let unchanged = next.len() == beam.len()
            && next
                .iter()
                .zip(&beam)
                .all(|(a, b)| a.assignments == b.assignments);
        if unchanged {
            break;
        }
        beam = next;
        trace.iterations.push(beam.clone());
    }
    (beam, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn all_zero_gives_empty_mapping() {
        let t = PairTable::from_fn(names("b", 3), names("t", 3), |_, _, _, _| 0.0).unwrap();
        let r = beam_search(&t, 20);
        assert_eq!(r.len(), 1);
        assert!(r[0].assignments.is_empty());
        assert_eq!(r[0].score, 0.0);
    }

    #[test]
    fn identity_structure_is_recovered() {
        let t = PairTable::from_fn(names("b", 4), names("t", 4), |i, j, k, p| {
            if i == k && j == p {
                1.0
            } else {
                0.1 * ((i + j + k + p) % 2) as f64
            }
        })
        .unwrap();
        let r = beam_search(&t, 20);
        assert_eq!(r[0].assignments, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert!((r[0].score - 6.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_components_are_joined() {
        // (b0,b1)->(t0,t1) and (b2,b3)->(t2,t3) score 1, everything else 0.
        let t = PairTable::from_fn(names("b", 4), names("t", 4), |i, j, k, p| {
            if (i, j, k, p) == (0, 1, 0, 1) || (i, j, k, p) == (2, 3, 2, 3) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let r = beam_search(&t, 20);
        assert_eq!(r[0].assignments.len(), 4);
        assert_eq!(r[0].score, 2.0);
        assert_eq!(r[1].score, 1.0);
    }

    #[test]
    fn zero_increment_entities_stay_unmapped() {
        let t = PairTable::from_fn(names("b", 3), names("t", 3), |i, j, k, p| {
            if (i, j, k, p) == (0, 1, 0, 1) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let r = beam_search(&t, 20);
        assert_eq!(r[0].assignments, vec![(0, 0), (1, 1)]);
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn width_one_is_greedy_and_scores_never_drop() {
        let t = PairTable::from_fn(names("b", 4), names("t", 5), |i, j, k, p| {
            ((i * 7 + j * 3 + k * 5 + p * 11) % 13) as f64 / 13.0
        })
        .unwrap();
        let (r, trace) = beam_search_traced(&t, 1);
        assert_eq!(r.len(), 1);
        let mut last = 0.0;
        for it in &trace.iterations {
            assert!(it[0].score >= last);
            last = it[0].score;
            for s in it {
                assert!((s.frontier_score - s.score).abs() < 1e-9);
            }
        }
    }
}
