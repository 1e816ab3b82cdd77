//! Erdős–Rényi G(n, m) reference values for clustering and path length.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{average_clustering_coefficient, path_stats, SocialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub nodes: usize,
    pub edges: usize,
    pub samples: usize,
    pub average_clustering: f64,
    /// Mean over samples where a path length is defined.
    pub average_path_length: Option<f64>,
}

/// Averages over `samples` uniform random graphs with `n` nodes and `m` edges.
pub fn random_graph_baseline(n: usize, m: usize, samples: usize, seed: u64) -> Option<BaselineStats> {
    if n == 0 || samples == 0 {
        return None;
    }
    let max_edges = n * (n - 1) / 2;
    let m = m.min(max_edges);
    let names: Vec<String> = (0..n).map(|i| format!("{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clustering = 0.0;
    let mut path_sum = 0.0;
    let mut path_samples = 0usize;
    for _ in 0..samples {
        let mut g = SocialGraph::undirected(names.iter().cloned());
        for pair in index::sample(&mut rng, max_edges, m).into_vec() {
            let (i, j) = unrank_pair(pair, n);
            g.add_edge(&names[i], &names[j], 1.0).expect("valid pair");
        }
        clustering += average_clustering_coefficient(&g).expect("non-empty graph");
        if let Ok(p) = path_stats(&g) {
            path_sum += p.average_path_length;
            path_samples += 1;
        }
    }
    Some(BaselineStats {
        nodes: n,
        edges: m,
        samples,
        average_clustering: clustering / samples as f64,
        average_path_length: (path_samples > 0).then(|| path_sum / path_samples as f64),
    })
}

/// Maps `0..n(n-1)/2` onto pairs `i < j` in row-major order.
fn unrank_pair(mut r: usize, n: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if r < row {
            return (i, i + 1 + r);
        }
        r -= row;
    }
    unreachable!("rank out of range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unranking_covers_all_pairs() {
        let n = 6;
        let pairs: Vec<_> = (0..n * (n - 1) / 2).map(|r| unrank_pair(r, n)).collect();
        let mut expected = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                expected.push((i, j));
            }
        }
        assert_eq!(pairs, expected);
    }

    #[test]
    fn complete_baseline() {
        let b = random_graph_baseline(8, 100, 3, 1).unwrap();
        assert_eq!(b.edges, 28);
        assert_eq!(b.average_clustering, 1.0);
        assert_eq!(b.average_path_length, Some(1.0));
    }

    #[test]
    fn sparse_baseline_is_deterministic() {
        let a = random_graph_baseline(40, 60, 5, 9).unwrap();
        let b = random_graph_baseline(40, 60, 5, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.average_clustering < 0.5);
    }
}
