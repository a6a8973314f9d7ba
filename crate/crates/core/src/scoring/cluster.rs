use serde::{Deserialize, Serialize};

use crate::model::{DomainSide, RelationPhrase};

/// A group of near-synonymous relation phrases on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCluster {
    pub side: DomainSide,
    pub members: Vec<RelationPhrase>,
    pub representative: String,
}

/// Average-linkage agglomerative clustering over a cosine matrix.
///
/// Clusters merge while the smallest average `1 - cos` distance is at most
/// `distance_threshold`. Equal distances (within 1e-12) merge the pair whose
/// representative labels sort first. `representative` picks a member of a
/// cluster given its item indices. Returns clusters with sorted members,
/// ordered by representative label.
pub(crate) fn agglomerate(
    sims: &[Vec<f64>],
    labels: &[&str],
    distance_threshold: f64,
    representative: &dyn Fn(&[usize]) -> usize,
) -> Vec<(Vec<usize>, usize)> {
    let n = labels.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut reps: Vec<usize> = (0..n).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 1.0 - sims[i][j]).collect())
        .collect();
    let mut alive: Vec<usize> = (0..n).collect();

    while alive.len() > 1 {
        let mut best: Option<(f64, (&str, &str), usize, usize)> = None;
        for (x, &a) in alive.iter().enumerate() {
            for &b in &alive[x + 1..] {
                let d = dist[a][b];
                let (la, lb) = (labels[reps[a]], labels[reps[b]]);
                let key = if la <= lb { (la, lb) } else { (lb, la) };
                let better = match &best {
                    None => true,
                    Some((bd, bkey, _, _)) => {
                        d < *bd - 1e-12 || ((d - *bd).abs() <= 1e-12 && key < *bkey)
                    }
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (d, _, a, b) = best.expect("at least two clusters");
        if d > distance_threshold {
            break;
        }
        let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
        for &x in &alive {
            if x != a && x != b {
                let merged = (na * dist[a][x] + nb * dist[b][x]) / (na + nb);
                dist[a][x] = merged;
                dist[x][a] = merged;
            }
        }
        let moved = std::mem::take(&mut clusters[b]);
        clusters[a].extend(moved);
        clusters[a].sort_by(|&i, &j| labels[i].cmp(labels[j]));
        reps[a] = representative(&clusters[a]);
        alive.retain(|&x| x != b);
    }

    let mut out: Vec<(Vec<usize>, usize)> = alive
        .into_iter()
        .map(|c| (std::mem::take(&mut clusters[c]), reps[c]))
        .collect();
    out.sort_by(|x, y| labels[x.1].cmp(labels[y.1]));
    out
}

/// Member with the highest average cosine to the other members; ties go to
/// the first in `members` order.
pub(crate) fn medoid(sims: &[Vec<f64>], members: &[usize]) -> usize {
    if members.len() == 1 {
        return members[0];
    }
    let mut best = members[0];
    let mut best_avg = f64::NEG_INFINITY;
    for &i in members {
        let avg = members
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| sims[i][j])
            .sum::<f64>()
            / (members.len() - 1) as f64;
        if avg > best_avg {
            best = i;
            best_avg = avg;
        }
    }
    best
}

/// Member whose vector has the highest cosine to the members' mean vector.
pub(crate) fn closest_to_centroid(vectors: &[Option<&[f64]>], members: &[usize]) -> usize {
    let dim = members
        .iter()
        .find_map(|&i| vectors[i].map(<[f64]>::len))
        .unwrap_or(0);
    let mut centroid = vec![0.0; dim];
    for &i in members {
        if let Some(v) = vectors[i] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
    }
    let mut best = members[0];
    let mut best_dot = f64::NEG_INFINITY;
    for &i in members {
        let dot = match vectors[i] {
            Some(v) => v.iter().zip(&centroid).map(|(a, b)| a * b).sum(),
            None => f64::NEG_INFINITY,
        };
        if dot > best_dot {
            best = i;
            best_dot = dot;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(sims: &[Vec<f64>], labels: &[&str], t: f64) -> Vec<Vec<usize>> {
        let rep = |m: &[usize]| medoid(sims, m);
        agglomerate(sims, labels, t, &rep)
            .into_iter()
            .map(|c| c.0)
            .collect()
    }

    #[test]
    fn empty_and_single() {
        assert!(run(&[], &[], 0.5).is_empty());
        assert_eq!(run(&[vec![1.0]], &["a"], 0.5), vec![vec![0]]);
    }

    #[test]
    fn average_linkage_stops_at_threshold() {
        // a-b close, c close to b but far from a: average distance of c to
        // {a, b} is (0.9 + 0.2) / 2 = 0.55 > 0.5.
        let sims = vec![
            vec![1.0, 0.9, 0.1],
            vec![0.9, 1.0, 0.8],
            vec![0.1, 0.8, 1.0],
        ];
        assert_eq!(run(&sims, &["a", "b", "c"], 0.5), vec![vec![0, 1], vec![2]]);
        assert_eq!(run(&sims, &["a", "b", "c"], 0.6), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ties_merge_smallest_labels_first() {
        // d(x,y) = d(y,z) = 0.4, d(x,z) = 0.8: whichever tie merges first
        // leaves the third item at average distance 0.6.
        let sims = vec![
            vec![1.0, 0.6, 0.2],
            vec![0.6, 1.0, 0.6],
            vec![0.2, 0.6, 1.0],
        ];
        assert_eq!(run(&sims, &["c", "b", "a"], 0.5), vec![vec![2, 1], vec![0]]);
        assert_eq!(run(&sims, &["a", "b", "c"], 0.5), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn medoid_prefers_central_member() {
        let sims = vec![
            vec![1.0, 0.9, 0.2],
            vec![0.9, 1.0, 0.8],
            vec![0.2, 0.8, 1.0],
        ];
        assert_eq!(medoid(&sims, &[0, 1, 2]), 1);
        assert_eq!(medoid(&sims, &[2]), 2);
    }

    #[test]
    fn centroid_representative() {
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        let c = [0.6, 0.8];
        let v = vec![Some(&a[..]), Some(&b[..]), Some(&c[..])];
        assert_eq!(closest_to_centroid(&v, &[0, 1, 2]), 2);
    }
}
