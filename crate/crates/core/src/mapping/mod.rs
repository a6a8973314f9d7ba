//! Pair-mapping score table, the mapping objective and beam search.

mod beam;

pub use beam::{beam_search, beam_search_traced, BeamState, BeamTrace, SearchConfig};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Entity, Mapping};
use crate::scoring::Scorer;

/// Largest table (n² · m² cells) we agree to materialize.
const MAX_TABLE_CELLS: usize = 1 << 26;

/// `sim*` for every base pair against every ordered target pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    base: Vec<String>,
    target: Vec<String>,
    scores: Vec<f64>,
}

impl PairTable {
    /// Evaluates `score(i, j, k, p)` for `i < j` and `k != p`; the mirrored
    /// entry `(j, i, p, k)` gets the same value.
    pub fn from_fn<F>(base: Vec<String>, target: Vec<String>, score: F) -> Result<Self>
    where
        F: Fn(usize, usize, usize, usize) -> f64 + Sync,
    {
        let (n, m) = (base.len(), target.len());
        if n < 2 || m < 2 {
            return Err(Error::Input(format!(
                "need at least two entities per side, got {n} base and {m} target"
            )));
        }
        let cells = n
            .checked_mul(n)
            .and_then(|x| x.checked_mul(m))
            .and_then(|x| x.checked_mul(m))
            .filter(|&c| c <= MAX_TABLE_CELLS)
            .ok_or_else(|| Error::Input(format!("domains too large ({n} x {m})")))?;
        let jobs: Vec<(usize, usize, usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .flat_map(|(i, j)| {
                (0..m).flat_map(move |k| (0..m).filter(move |&p| p != k).map(move |p| (i, j, k, p)))
            })
            .collect();
        let values: Vec<f64> = jobs.par_iter().map(|&(i, j, k, p)| score(i, j, k, p)).collect();
        let mut scores = vec![0.0; cells];
        for (&(i, j, k, p), v) in jobs.iter().zip(values) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!("pair score {v} is not a finite non-negative number")));
            }
            scores[((i * n + j) * m + k) * m + p] = v;
            scores[((j * n + i) * m + p) * m + k] = v;
        }
        Ok(PairTable {
            base,
            target,
            scores,
        })
    }

    pub fn base(&self) -> &[String] {
        &self.base
    }

    pub fn target(&self) -> &[String] {
        &self.target
    }

    /// `sim*(b_i, b_j, t_k, t_p)`; zero when an index repeats.
    pub fn score(&self, i: usize, j: usize, k: usize, p: usize) -> f64 {
        let (n, m) = (self.base.len(), self.target.len());
        if i == j || k == p {
            return 0.0;
        }
        self.scores[((i * n + j) * m + k) * m + p]
    }

    /// Number of distinct pair-mappings (`i < j`, `k != p`).
    pub fn len(&self) -> usize {
        let (n, m) = (self.base.len(), self.target.len());
        n * (n - 1) / 2 * m * (m - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.base.iter().position(|b| b == name)
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target.iter().position(|t| t == name)
    }
}

/// Scores every pair-mapping of the two domains.
pub fn score_all_pairs(base: &[Entity], target: &[Entity], scorer: &Scorer) -> Result<PairTable> {
    let b: Vec<String> = base.iter().map(|e| e.name.clone()).collect();
    let t: Vec<String> = target.iter().map(|e| e.name.clone()).collect();
    if b.len() >= 2 && t.len() >= 2 {
        scorer.prepare(&b, &t);
    }
    PairTable::from_fn(b.clone(), t.clone(), |i, j, k, p| {
        scorer.sim_star(&b[i], &b[j], &t[k], &t[p]).score
    })
}

/// Objective of a set of `(base index, target index)` assignments: the sum
/// of `sim*` over every pair of assignments, in base-index order.
pub fn objective_indices(assignments: &[(usize, usize)], table: &PairTable) -> f64 {
    let mut sorted = assignments.to_vec();
    sorted.sort_unstable();
    let mut total = 0.0;
    for (x, &(j, p)) in sorted.iter().enumerate() {
        for &(i, k) in &sorted[x + 1..] {
            total += table.score(j, i, p, k);
        }
    }
    total
}

/// Objective of `mapping` over `table`. Unmapped entities contribute
/// nothing; assignments naming unknown entities are an input error.
pub fn objective_score(mapping: &Mapping, table: &PairTable) -> Result<f64> {
    let idx = mapping
        .pairs
        .iter()
        .map(|a| match (table.base_index(&a.base), table.target_index(&a.target)) {
            (Some(i), Some(k)) => Ok((i, k)),
            _ => Err(Error::Input(format!(
                "assignment {} -> {} is outside the table",
                a.base, a.target
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(objective_indices(&idx, table))
}

/// Turns beam states into validated mappings.
pub fn to_mappings(states: &[BeamState], base: &[Entity], target: &[Entity], table: &PairTable) -> Result<Vec<Mapping>> {
    states
        .iter()
        .map(|s| {
            let pairs = s
                .assignments
                .iter()
                .map(|&(i, k)| (table.base()[i].clone(), table.target()[k].clone()));
            Mapping::new(pairs, base, target, s.score)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn table_counts_and_mirrors() {
        let t = PairTable::from_fn(names("b", 3), names("t", 3), |i, j, k, p| {
            (i * 1000 + j * 100 + k * 10 + p) as f64
        })
        .unwrap();
        assert_eq!(t.len(), 18);
        assert_eq!(t.score(0, 1, 2, 0), 120.0);
        assert_eq!(t.score(1, 0, 0, 2), 120.0);
        assert_eq!(t.score(1, 1, 0, 2), 0.0);
        let two = PairTable::from_fn(names("b", 2), names("t", 2), |_, _, _, _| 1.0).unwrap();
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn too_small_is_an_input_error() {
        assert!(matches!(
            PairTable::from_fn(names("b", 1), names("t", 3), |_, _, _, _| 0.0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn objective_sums_every_assignment_pair() {
        let t = PairTable::from_fn(names("b", 3), names("t", 3), |i, j, k, p| {
            if (i, j, k, p) == (0, 1, 0, 1) {
                2.0
            } else if (i, j, k, p) == (1, 2, 1, 2) {
                0.5
            } else if (i, j, k, p) == (0, 2, 0, 2) {
                0.25
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(objective_indices(&[], &t), 0.0);
        assert_eq!(objective_indices(&[(0, 0), (1, 1)], &t), 2.0);
        assert_eq!(objective_indices(&[(2, 2), (0, 0), (1, 1)], &t), 2.75);
        assert_eq!(objective_indices(&[(1, 0), (0, 1)], &t), 0.0);
    }
}
