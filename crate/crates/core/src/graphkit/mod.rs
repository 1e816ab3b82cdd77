//! Graph and statistics kernel shared by the profilers.

mod baseline;
mod fit;
mod louvain;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{random_graph_baseline, BaselineStats};
pub use fit::{fit_shifted_power, CurveFit, EXPONENT_RANGE, GOLDEN_TOLERANCE};
pub use louvain::{louvain_communities, modularity, Partition};

/// Graph over opaque string ids. Undirected edges are stored with the
/// smaller id first; self-loops are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct SocialGraph {
    directed: bool,
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub weight: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    directed: bool,
    nodes: Vec<String>,
    edges: Vec<EdgeRecord>,
}

impl From<SocialGraph> for GraphRepr {
    fn from(g: SocialGraph) -> Self {
        GraphRepr {
            directed: g.directed,
            edges: g.edge_records(),
            nodes: g.nodes.into_iter().collect(),
        }
    }
}

impl TryFrom<GraphRepr> for SocialGraph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        let mut g = SocialGraph::with_nodes(r.directed, r.nodes);
        for e in r.edges {
            g.add_edge(&e.src, &e.dst, e.weight)?;
        }
        Ok(g)
    }
}

impl SocialGraph {
    pub fn undirected<I, S>(nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_nodes(false, nodes)
    }

    pub fn directed<I, S>(nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_nodes(true, nodes)
    }

    fn with_nodes<I, S>(directed: bool, nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SocialGraph {
            directed,
            nodes: nodes.into_iter().map(Into::into).collect(),
            edges: BTreeMap::new(),
        }
    }

    /// Undirected graph from an edge list; nodes are the edge endpoints plus
    /// `extra_nodes`.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>, extra_nodes: &[&str]) -> Result<Self> {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut g = SocialGraph::undirected(
            edges.iter().flat_map(|&(a, b)| [a, b]).chain(extra_nodes.iter().copied()),
        );
        for (a, b) in edges {
            g.add_edge(a, b, 1.0)?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, id: impl Into<String>) {
        self.nodes.insert(id.into());
    }

    fn key(&self, a: &str, b: &str) -> (String, String) {
        if self.directed || a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    /// Inserts or replaces an edge.
    pub fn add_edge(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        if a == b {
            return Err(Error::SelfLoop(a.to_string()));
        }
        for n in [a, b] {
            if !self.nodes.contains(n) {
                return Err(Error::UnknownNode(n.to_string()));
            }
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidWeight(weight));
        }
        let k = self.key(a, b);
        self.edges.insert(k, weight);
        Ok(())
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.edges.iter().map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges()
            .map(|(a, b, w)| EdgeRecord {
                src: a.to_string(),
                dst: b.to_string(),
                weight: w,
            })
            .collect()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.edges.get(&self.key(a, b)).copied()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.weight(a, b).is_some()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Undirected view: `{a, b}` for every edge in either direction, weight 1.
    pub fn to_undirected(&self) -> SocialGraph {
        let mut g = SocialGraph::undirected(self.nodes.iter().cloned());
        for (a, b, _) in self.edges() {
            g.edges.insert(g.key(a, b), 1.0);
        }
        g
    }

    /// Subgraph induced on `keep` (ids absent from the graph are ignored).
    pub fn induced<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> SocialGraph {
        let nodes: BTreeSet<String> = keep
            .into_iter()
            .filter(|n| self.nodes.contains(*n))
            .map(str::to_string)
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|((a, b), _)| nodes.contains(a) && nodes.contains(b))
            .map(|(k, w)| (k.clone(), *w))
            .collect();
        SocialGraph {
            directed: self.directed,
            nodes,
            edges,
        }
    }

    /// In-degree of every node (directed graphs).
    pub fn in_degrees(&self) -> BTreeMap<&str, usize> {
        let mut out: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for (_, b, _) in self.edges() {
            *out.get_mut(b).unwrap() += 1;
        }
        out
    }

    pub(crate) fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }
}

/// Index-based adjacency lists of the undirected view, nodes in id order.
pub(crate) struct Adjacency {
    pub ids: Vec<String>,
    pub neighbors: Vec<Vec<usize>>,
    pub weighted: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    fn new(g: &SocialGraph) -> Self {
        let ids: Vec<String> = g.nodes.iter().cloned().collect();
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); ids.len()];
        for (a, b, w) in g.edges() {
            let (i, j) = (index[a], index[b]);
            *acc[i].entry(j).or_insert(0.0) += w;
            *acc[j].entry(i).or_insert(0.0) += w;
        }
        let weighted: Vec<Vec<(usize, f64)>> = acc.into_iter().map(|m| m.into_iter().collect()).collect();
        let neighbors = weighted.iter().map(|v| v.iter().map(|&(j, _)| j).collect()).collect();
        Adjacency { ids, neighbors, weighted }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    fn local_clustering(&self, i: usize) -> f64 {
        let nb = &self.neighbors[i];
        let d = nb.len();
        if d < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (x, &a) in nb.iter().enumerate() {
            for &b in &nb[x + 1..] {
                if self.neighbors[a].binary_search(&b).is_ok() {
                    links += 1;
                }
            }
        }
        links as f64 / (d * (d - 1) / 2) as f64
    }

    fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[src] = Some(0);
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    q.push_back(v);
                }
            }
        }
        dist
    }
}

fn require_undirected(g: &SocialGraph) -> Result<()> {
    if g.directed {
        Err(Error::DirectedGraph)
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    /// Fraction of nodes with value ≤ `value`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    /// Degree to node count.
    pub histogram: BTreeMap<usize, usize>,
    pub cdf: Vec<CdfPoint>,
    /// `None` for the empty graph.
    pub mean: Option<f64>,
    pub node_count: usize,
}

impl DegreeDistribution {
    fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut histogram = BTreeMap::new();
        let mut n = 0usize;
        let mut sum = 0usize;
        for d in degrees {
            *histogram.entry(d).or_insert(0) += 1;
            n += 1;
            sum += d;
        }
        DegreeDistribution {
            cdf: cdf_of(histogram.iter().map(|(&d, &c)| (d as f64, c))),
            histogram,
            mean: (n > 0).then(|| sum as f64 / n as f64),
            node_count: n,
        }
    }

    /// Fraction of nodes whose degree exceeds `threshold`.
    pub fn fraction_above(&self, threshold: usize) -> Option<f64> {
        (self.node_count > 0).then(|| {
            let above: usize = self.histogram.range(threshold + 1..).map(|(_, c)| c).sum();
            above as f64 / self.node_count as f64
        })
    }
}

/// Empirical CDF from `(value, count)` pairs sorted by value.
pub(crate) fn cdf_of(counts: impl IntoIterator<Item = (f64, usize)>) -> Vec<CdfPoint> {
    let counts: Vec<(f64, usize)> = counts.into_iter().collect();
    let total: usize = counts.iter().map(|(_, c)| c).sum();
    let mut acc = 0;
    counts
        .into_iter()
        .map(|(value, c)| {
            acc += c;
            CdfPoint {
                value,
                fraction: acc as f64 / total as f64,
            }
        })
        .collect()
}

/// Empirical CDF of arbitrary samples; equal values share one point.
pub fn sample_cdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match counts.last_mut() {
            Some((last, c)) if *last == x => *c += 1,
            _ => counts.push((x, 1)),
        }
    }
    cdf_of(counts)
}

pub fn degree_distribution(g: &SocialGraph) -> Result<DegreeDistribution> {
    require_undirected(g)?;
    let adj = g.adjacency();
    Ok(DegreeDistribution::from_degrees(adj.neighbors.iter().map(Vec::len)))
}

/// (in-degree, out-degree) distributions of a directed graph.
pub fn directed_degree_distributions(g: &SocialGraph) -> Result<(DegreeDistribution, DegreeDistribution)> {
    if !g.directed {
        return Err(Error::InvalidInput("expected a directed graph".into()));
    }
    let mut indeg: BTreeMap<&str, usize> = g.nodes.iter().map(|n| (n.as_str(), 0)).collect();
    let mut outdeg = indeg.clone();
    for (a, b, _) in g.edges() {
        *outdeg.get_mut(a).unwrap() += 1;
        *indeg.get_mut(b).unwrap() += 1;
    }
    Ok((
        DegreeDistribution::from_degrees(indeg.into_values()),
        DegreeDistribution::from_degrees(outdeg.into_values()),
    ))
}

/// Node degrees in id order.
pub fn degrees(g: &SocialGraph) -> Result<BTreeMap<String, usize>> {
    require_undirected(g)?;
    let adj = g.adjacency();
    Ok(adj.ids.iter().cloned().zip(adj.neighbors.iter().map(Vec::len)).collect())
}

/// Triangles through `node` over its neighbor pairs; 0 below degree 2.
pub fn local_clustering_coefficient(g: &SocialGraph, node: &str) -> Result<f64> {
    require_undirected(g)?;
    let adj = g.adjacency();
    let i = adj.index_of(node).ok_or_else(|| Error::UnknownNode(node.to_string()))?;
    Ok(adj.local_clustering(i))
}

/// Local coefficient of every node, in id order.
pub fn local_clustering_coefficients(g: &SocialGraph) -> Result<BTreeMap<String, f64>> {
    require_undirected(g)?;
    let adj = g.adjacency();
    Ok((0..adj.len()).map(|i| (adj.ids[i].clone(), adj.local_clustering(i))).collect())
}

/// Mean local coefficient over all nodes; nodes of degree < 2 count as 0.
pub fn average_clustering_coefficient(g: &SocialGraph) -> Result<f64> {
    require_undirected(g)?;
    let adj = g.adjacency();
    if adj.len() == 0 {
        return Err(Error::Undefined("clustering of an empty graph".into()));
    }
    let sum: f64 = (0..adj.len()).map(|i| adj.local_clustering(i)).sum();
    Ok(sum / adj.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    /// Mean BFS distance over ordered pairs of distinct, mutually reachable nodes.
    pub average_path_length: f64,
    /// Largest finite distance.
    pub diameter: usize,
    pub reachable_pairs: u64,
}

pub fn path_stats(g: &SocialGraph) -> Result<PathStats> {
    require_undirected(g)?;
    let adj = g.adjacency();
    // integer sums reduce identically regardless of thread scheduling
    let (sum, pairs, diameter) = (0..adj.len())
        .into_par_iter()
        .map(|s| {
            let mut sum = 0u64;
            let mut pairs = 0u64;
            let mut ecc = 0usize;
            for d in adj.bfs(s).into_iter().flatten().filter(|&d| d > 0) {
                sum += d as u64;
                pairs += 1;
                ecc = ecc.max(d);
            }
            (sum, pairs, ecc)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)));
    if pairs == 0 {
        return Err(Error::Undefined("fewer than two mutually reachable nodes".into()));
    }
    Ok(PathStats {
        average_path_length: sum as f64 / pairs as f64,
        diameter,
        reachable_pairs: pairs,
    })
}

pub fn average_path_length(g: &SocialGraph) -> Result<f64> {
    path_stats(g).map(|p| p.average_path_length)
}

/// Connected components of the undirected view, each sorted, largest first
/// (ties by first id).
pub fn connected_components(g: &SocialGraph) -> Vec<Vec<String>> {
    let adj = g.to_undirected().adjacency();
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        let comp: Vec<usize> = adj
            .bfs(s)
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|_| i))
            .collect();
        for &i in &comp {
            seen[i] = true;
        }
        out.push(comp.into_iter().map(|i| adj.ids[i].clone()).collect::<Vec<_>>());
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    out
}

/// Edges present in both graphs; the weight is the smaller of the two.
pub fn graph_intersection(g1: &SocialGraph, g2: &SocialGraph) -> Result<SocialGraph> {
    if g1.nodes != g2.nodes || g1.directed != g2.directed {
        return Err(Error::NodeUniverseMismatch);
    }
    let edges = g1
        .edges
        .iter()
        .filter_map(|(k, w1)| g2.edges.get(k).map(|w2| (k.clone(), w1.min(*w2))))
        .collect();
    Ok(SocialGraph {
        directed: g1.directed,
        nodes: g1.nodes.clone(),
        edges,
    })
}
