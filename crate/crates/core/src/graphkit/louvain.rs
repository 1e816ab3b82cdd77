//! Newman modularity and the Louvain multi-level heuristic.
//!
//! Louvain alternates a local-moving phase (each node joins the neighboring
//! community with the largest modularity gain) with aggregation of
//! communities into super-nodes, until a level produces no move. Each run
//! ends with a node-level pass on the original graph; the best of several
//! seeded runs then gets a perturbation pass on graphs of moderate size.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{require_undirected, SocialGraph};
use crate::error::{Error, Result};

const GAIN_EPS: f64 = 1e-12;
const MAX_PASSES: usize = 1_000;
const LOUVAIN_RESTARTS: usize = 8;
const PERTURB_NODE_LIMIT: usize = 500;

/// Total assignment of nodes to communities `0..count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: BTreeMap<String, usize>,
    count: usize,
}

impl Partition {
    /// Community ids are renumbered `0..` in order of first appearance over
    /// node ids, so equal groupings compare equal.
    pub fn from_assignment<K: Into<String>>(assignment: impl IntoIterator<Item = (K, usize)>) -> Self {
        let raw: BTreeMap<String, usize> = assignment.into_iter().map(|(k, c)| (k.into(), c)).collect();
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let assignment = raw
            .into_iter()
            .map(|(k, c)| {
                let next = remap.len();
                (k, *remap.entry(c).or_insert(next))
            })
            .collect();
        Partition {
            assignment,
            count: remap.len(),
        }
    }

    pub fn singletons<'a>(nodes: impl IntoIterator<Item = &'a String>) -> Self {
        Self::from_assignment(nodes.into_iter().enumerate().map(|(i, n)| (n.clone(), i)))
    }

    pub fn single<'a>(nodes: impl IntoIterator<Item = &'a String>) -> Self {
        Self::from_assignment(nodes.into_iter().map(|n| (n.clone(), 0)))
    }

    pub fn community_of(&self, node: &str) -> Option<usize> {
        self.assignment.get(node).copied()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    /// Members of each community, indexed by community id.
    pub fn communities(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.count];
        for (n, &c) in &self.assignment {
            out[c].push(n.clone());
        }
        out
    }

    /// Same grouping regardless of community numbering.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        let norm = |p: &Partition| -> BTreeSet<Vec<String>> { p.communities().into_iter().collect() };
        norm(self) == norm(other)
    }
}

/// `Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)`, weighted.
pub fn modularity(g: &SocialGraph, p: &Partition) -> Result<f64> {
    require_undirected(g)?;
    let m = g.total_weight();
    if g.edge_count() == 0 || m <= 0.0 {
        return Err(Error::NoEdges);
    }
    for n in g.nodes() {
        if p.community_of(n).is_none() {
            return Err(Error::IncompletePartition(n.clone()));
        }
    }
    let mut internal = vec![0.0; p.count()];
    let mut strength = vec![0.0; p.count()];
    for (a, b, w) in g.edges() {
        let (ca, cb) = (p.assignment[a], p.assignment[b]);
        if ca == cb {
            internal[ca] += w;
        }
        strength[ca] += w;
        strength[cb] += w;
    }
    let q = internal
        .iter()
        .zip(&strength)
        .map(|(l, d)| l / m - (d / (2.0 * m)).powi(2))
        .sum();
    Ok(q)
}

/// Weighted graph over `0..n` with self-loop weights, one Louvain level.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn strength(&self, i: usize) -> f64 {
        2.0 * self.self_loops[i] + self.adj[i].iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// Local moving. Returns the community of each node and whether any
    /// node moved.
    fn local_moves(&self, two_m: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let mut order: Vec<usize> = (0..self.adj.len()).collect();
        order.shuffle(rng);
        self.local_moves_from((0..self.adj.len()).collect(), &order, two_m)
    }

    /// Local moving from a given assignment. Only nodes listed in `order`
    /// may move.
    fn local_moves_from(&self, mut comm: Vec<usize>, order: &[usize], two_m: f64) -> (Vec<usize>, bool) {
        let n = self.adj.len();
        let k: Vec<f64> = (0..n).map(|i| self.strength(i)).collect();
        let mut tot = vec![0.0; n];
        for i in 0..n {
            tot[comm[i]] += k[i];
        }

        let mut moved_any = false;
        let mut links: BTreeMap<usize, f64> = BTreeMap::new();
        for _ in 0..MAX_PASSES {
            let mut moved = false;
            for &i in order {
                let current = comm[i];
                tot[current] -= k[i];
                links.clear();
                links.insert(current, 0.0);
                for &(j, w) in &self.adj[i] {
                    *links.entry(comm[j]).or_insert(0.0) += w;
                }
                let gain = |c: usize, w_ic: f64| w_ic - tot[c] * k[i] / two_m;
                let stay = gain(current, links[&current]);
                let mut best = current;
                let mut best_gain = stay;
                // ascending community id: strict improvement keeps the lowest id on ties
                for (&c, &w) in &links {
                    let g = gain(c, w);
                    if c != current && g > best_gain + GAIN_EPS {
                        best = c;
                        best_gain = g;
                    }
                }
                comm[i] = best;
                tot[best] += k[i];
                if best != current {
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        (comm, moved_any)
    }

    fn quality(&self, comm: &[usize], two_m: f64) -> f64 {
        let n = self.adj.len();
        let mut internal = vec![0.0; n];
        let mut tot = vec![0.0; n];
        for i in 0..n {
            tot[comm[i]] += self.strength(i);
            internal[comm[i]] += 2.0 * self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                if comm[j] == comm[i] {
                    internal[comm[i]] += w;
                }
            }
        }
        internal.iter().zip(&tot).map(|(l, t)| l / two_m - (t / two_m).powi(2)).sum()
    }

    /// Escapes single-move optima: move one node to a neighboring community,
    /// re-optimize the others greedily, keep the result if Q improves.
    fn perturb_refine(&self, mut comm: Vec<usize>, two_m: f64) -> Vec<usize> {
        let n = self.adj.len();
        let mut q = self.quality(&comm, two_m);
        for _ in 0..n {
            let mut improved = false;
            'nodes: for i in 0..n {
                let targets: BTreeSet<usize> =
                    self.adj[i].iter().map(|&(j, _)| comm[j]).filter(|&c| c != comm[i]).collect();
                for c in targets {
                    let mut trial = comm.clone();
                    trial[i] = c;
                    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                    let (trial, _) = self.local_moves_from(trial, &others, two_m);
                    let tq = self.quality(&trial, two_m);
                    if tq > q + GAIN_EPS {
                        comm = trial;
                        q = tq;
                        improved = true;
                        break 'nodes;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        comm
    }

    fn aggregate(&self, comm: &[usize]) -> (Level, Vec<usize>) {
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let dense: Vec<usize> = comm
            .iter()
            .map(|c| {
                let next = remap.len();
                *remap.entry(*c).or_insert(next)
            })
            .collect();
        let nc = remap.len();
        let mut self_loops = vec![0.0; nc];
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nc];
        for (i, nbrs) in self.adj.iter().enumerate() {
            let ci = dense[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in nbrs {
                let cj = dense[j];
                if ci == cj {
                    // each internal edge is seen from both endpoints
                    self_loops[ci] += w / 2.0;
                } else {
                    *acc[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = acc.into_iter().map(|m| m.into_iter().collect()).collect();
        (Level { adj, self_loops }, dense)
    }
}

/// One multi-level run followed by a node-level refinement pass on the
/// original graph. Returns the community of each node in adjacency order.
fn louvain_run(base: &Level, two_m: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut level = Level {
        adj: base.adj.clone(),
        self_loops: base.self_loops.clone(),
    };
    let mut membership: Vec<usize> = (0..base.adj.len()).collect();
    loop {
        let (comm, moved) = level.local_moves(two_m, rng);
        if !moved {
            break;
        }
        let (next, dense) = level.aggregate(&comm);
        for m in membership.iter_mut() {
            *m = dense[*m];
        }
        let shrunk = next.adj.len() < level.adj.len();
        level = next;
        if !shrunk {
            break;
        }
    }
    let order: Vec<usize> = (0..base.adj.len()).collect();
    base.local_moves_from(membership, &order, two_m).0
}

/// Louvain partition and its modularity. The best of `LOUVAIN_RESTARTS`
/// runs is kept and refined; node visiting orders are drawn from `seed` and equal-gain
/// moves go to the lower community id.
pub fn louvain_communities(g: &SocialGraph, seed: u64) -> Result<(Partition, f64)> {
    require_undirected(g)?;
    let two_m = 2.0 * g.total_weight();
    if g.edge_count() == 0 || two_m <= 0.0 {
        return Err(Error::NoEdges);
    }
    let adj = g.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Level {
        adj: adj.weighted.clone(),
        self_loops: vec![0.0; adj.len()],
    };

    let mut best: Vec<usize> = (0..adj.len()).collect();
    let mut best_q = base.quality(&best, two_m);
    for _ in 0..LOUVAIN_RESTARTS {
        let membership = louvain_run(&base, two_m, &mut rng);
        let q = base.quality(&membership, two_m);
        if q > best_q + GAIN_EPS {
            best = membership;
            best_q = q;
        }
    }
    if adj.len() <= PERTURB_NODE_LIMIT {
        best = base.perturb_refine(best, two_m);
    }
    let partition = Partition::from_assignment(adj.ids.iter().cloned().zip(best));
    let q = modularity(g, &partition)?;
    Ok((partition, q))
}

#[cfg(test)]
mod tests {
    use super::super::testgraphs::*;
    use super::*;

    /// Exhaustive double sum over all node pairs.
    fn brute_modularity(g: &SocialGraph, p: &Partition) -> f64 {
        let nodes: Vec<&String> = g.nodes().iter().collect();
        let m = g.total_weight();
        let k = |n: &str| -> f64 { nodes.iter().filter_map(|o| g.weight(n, o)).sum() };
        let mut q = 0.0;
        for i in &nodes {
            for j in &nodes {
                if p.community_of(i) == p.community_of(j) {
                    let a = if i == j { 0.0 } else { g.weight(i, j).unwrap_or(0.0) };
                    q += 2.0 * m * a - k(i) * k(j);
                }
            }
        }
        q / (4.0 * m * m)
    }

    #[test]
    fn single_community_is_zero() {
        for seed in 0..5 {
            let g = random(12, 0.4, seed);
            let q = modularity(&g, &Partition::single(g.nodes())).unwrap();
            assert!(q.abs() < 1e-15, "{q}");
        }
    }

    #[test]
    fn two_triangles_by_component() {
        let g = two_triangles();
        let p = Partition::from_assignment([("a", 0), ("b", 0), ("c", 0), ("d", 1), ("e", 1), ("f", 1)]);
        assert_eq!(modularity(&g, &p).unwrap(), 0.5);
        assert_eq!(brute_modularity(&g, &p), 0.5);
    }

    #[test]
    fn weighted_matches_brute_force() {
        let mut g = random(7, 0.5, 3);
        let edges: Vec<(String, String)> = g.edges().map(|(a, b, _)| (a.to_string(), b.to_string())).collect();
        for (i, (a, b)) in edges.iter().enumerate() {
            g.add_edge(a, b, 0.5 + i as f64).unwrap();
        }
        let p = Partition::from_assignment(g.nodes().iter().enumerate().map(|(i, n)| (n.clone(), i % 3)));
        assert!((modularity(&g, &p).unwrap() - brute_modularity(&g, &p)).abs() < 1e-12);
    }

    #[test]
    fn singleton_baseline_formula() {
        let g = random(10, 0.3, 1);
        let m = g.total_weight();
        let expected: f64 = -degrees_of(&g).iter().map(|k| (k / (2.0 * m)).powi(2)).sum::<f64>();
        let q = modularity(&g, &Partition::singletons(g.nodes())).unwrap();
        assert!((q - expected).abs() < 1e-12);
        assert!(q <= 0.0);
    }

    fn degrees_of(g: &SocialGraph) -> Vec<f64> {
        g.nodes()
            .iter()
            .map(|n| g.nodes().iter().filter_map(|o| g.weight(n, o)).sum())
            .collect()
    }

    #[test]
    fn errors() {
        let g = SocialGraph::undirected(["a", "b"]);
        assert!(matches!(modularity(&g, &Partition::single(g.nodes())), Err(Error::NoEdges)));
        assert!(matches!(louvain_communities(&g, 0), Err(Error::NoEdges)));
        let g = two_triangles();
        let p = Partition::from_assignment([("a", 0)]);
        assert!(matches!(modularity(&g, &p), Err(Error::IncompletePartition(_))));
    }

    #[test]
    fn louvain_two_triangles() {
        let g = two_triangles();
        let (p, q) = louvain_communities(&g, 7).unwrap();
        assert_eq!(q, 0.5);
        let expected = Partition::from_assignment([("a", 0), ("b", 0), ("c", 0), ("d", 1), ("e", 1), ("f", 1)]);
        assert!(p.same_grouping(&expected));
    }

    #[test]
    fn louvain_complete_graph() {
        let g = complete(6);
        let (p, q) = louvain_communities(&g, 1).unwrap();
        assert!(q <= 1e-12);
        assert!(q >= -1e-12, "K6 optimum is the single community, got {q} with {p:?}");
    }

    #[test]
    fn louvain_clique_ring() {
        let mut edges: Vec<(String, String)> = Vec::new();
        for c in 0..4 {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((format!("c{c}n{i}"), format!("c{c}n{j}")));
                }
            }
            edges.push((format!("c{c}n0"), format!("c{}n4", (c + 1) % 4)));
        }
        let g = SocialGraph::from_edges(edges.iter().map(|(a, b)| (a.as_str(), b.as_str())), &[]).unwrap();
        for seed in 0..10 {
            let (p, q) = louvain_communities(&g, seed).unwrap();
            assert_eq!(p.count(), 4, "seed {seed}");
            for comm in p.communities() {
                let prefix = &comm[0][..2];
                assert!(comm.iter().all(|n| n.starts_with(prefix)));
            }
            assert!((q - modularity(&g, &p).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn louvain_is_deterministic_per_seed() {
        let g = random(25, 0.15, 4);
        let a = louvain_communities(&g, 11).unwrap();
        let b = louvain_communities(&g, 11).unwrap();
        assert_eq!(a, b);
    }
}
