//! User aspect: demographics, regional participation index and preference
//! clustering over label vectors.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphkit::{average_clustering_coefficient, Partition, SocialGraph};
use crate::model::{Dataset, UserId};
use crate::retrieval::ShowCorpus;

pub const PI_RANK: usize = 10;
pub const KMEANS_MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeHistogram {
    /// age → user count, known ages only.
    pub bins: BTreeMap<u32, usize>,
    pub known: usize,
    pub unknown: usize,
    /// Mean over known ages; `None` when no age is known.
    pub mean: Option<f64>,
}

pub fn age_histogram<'a>(users: impl IntoIterator<Item = &'a str>, dataset: &Dataset) -> AgeHistogram {
    let mut bins = BTreeMap::new();
    let mut unknown = 0;
    let mut sum = 0u64;
    for id in users.into_iter().collect::<BTreeSet<_>>() {
        match dataset.user(id).and_then(|u| u.age) {
            Some(a) => {
                *bins.entry(a).or_insert(0) += 1;
                sum += u64::from(a);
            }
            None => unknown += 1,
        }
    }
    let known: usize = bins.values().sum();
    AgeHistogram {
        bins,
        known,
        unknown,
        mean: (known > 0).then(|| sum as f64 / known as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCount {
    pub region: String,
    #[serde(rename = "UN")]
    pub un: u64,
}

/// Region counts over the given users, by region id. Users without a known
/// region are returned separately.
pub fn region_counts<'a>(users: impl IntoIterator<Item = &'a str>, dataset: &Dataset) -> (Vec<RegionCount>, usize) {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut unknown = 0;
    for id in users.into_iter().collect::<BTreeSet<_>>() {
        match dataset.user(id).and_then(|u| u.region.as_deref()) {
            Some(r) => *counts.entry(r).or_insert(0) += 1,
            None => unknown += 1,
        }
    }
    let rows = counts
        .into_iter()
        .map(|(r, un)| RegionCount {
            region: r.to_string(),
            un,
        })
        .collect();
    (rows, unknown)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiRow {
    pub region: String,
    #[serde(rename = "UN")]
    pub un: u64,
    #[serde(rename = "PI")]
    pub pi: f64,
    /// 1-based rank by descending UN, ties by region id.
    pub rank: usize,
}

/// `PI_i = (UN_i − UN_10) / UN_10` where `UN_10` is the count of the tenth
/// region by descending count (ties by region id). Rows come back in rank
/// order.
pub fn participation_index(counts: &[RegionCount]) -> Result<Vec<PiRow>> {
    if counts.len() < PI_RANK {
        return Err(Error::InvalidInput(format!(
            "{} regions, need at least {PI_RANK}",
            counts.len()
        )));
    }
    let mut sorted: Vec<&RegionCount> = counts.iter().collect();
    sorted.sort_by(|a, b| b.un.cmp(&a.un).then_with(|| a.region.cmp(&b.region)));
    let distinct: BTreeSet<&str> = counts.iter().map(|c| c.region.as_str()).collect();
    if distinct.len() != counts.len() {
        return Err(Error::InvalidInput("duplicate region ids".into()));
    }
    let un10 = sorted[PI_RANK - 1].un;
    if un10 == 0 {
        return Err(Error::Undefined("tenth-ranked region has zero users".into()));
    }
    let base = un10 as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, c)| PiRow {
            region: c.region.clone(),
            un: c.un,
            pi: (c.un as f64 - base) / base,
            rank: i + 1,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub user_id: UserId,
    pub weights: BTreeMap<String, f64>,
}

/// Raw label tallies per user: one unit per label of every show whose corpus
/// holds a post by the user.
fn label_tallies<'d>(corpora: &[ShowCorpus], dataset: &'d Dataset) -> BTreeMap<&'d str, BTreeMap<&'d str, u64>> {
    let mut out: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for c in corpora {
        let Some(show) = dataset.show(&c.show_id) else { continue };
        for m in c.members.iter().filter_map(|id| dataset.microblog(id)) {
            let t = out.entry(m.author_id.as_str()).or_default();
            for l in &show.labels {
                *t.entry(l.as_str()).or_insert(0) += 1;
            }
        }
    }
    out
}

fn normalize(user: &str, tally: &BTreeMap<&str, u64>) -> LabelVector {
    let total: u64 = tally.values().sum();
    LabelVector {
        user_id: user.to_string(),
        weights: tally
            .iter()
            .map(|(l, &n)| (l.to_string(), n as f64 / total as f64))
            .collect(),
    }
}

/// Each attributed post adds 1/3 to each label of its show; the result is
/// normalized to sum to 1.
pub fn user_label_vector(user_id: &str, corpora: &[ShowCorpus], dataset: &Dataset) -> Result<LabelVector> {
    label_tallies(corpora, dataset)
        .get(user_id)
        .map(|t| normalize(user_id, t))
        .ok_or_else(|| Error::NoAttributedPosts(user_id.to_string()))
}

/// Label vectors of every corpus author, by user id.
pub fn user_label_vectors(corpora: &[ShowCorpus], dataset: &Dataset) -> Vec<LabelVector> {
    let tallies: Vec<_> = label_tallies(corpora, dataset).into_iter().collect();
    tallies.par_iter().map(|(u, t)| normalize(u, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub k: usize,
    pub seed: u64,
    /// Coordinate order of the centroids.
    pub labels: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: BTreeMap<UserId, usize>,
    /// Sum of squared distances after each assignment step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Fewer distinct points than clusters; some clusters are duplicates.
    pub degenerate: bool,
}

impl KMeansResult {
    pub fn objective(&self) -> f64 {
        self.objective_history.last().copied().unwrap_or(0.0)
    }

    pub fn partition(&self) -> Partition {
        Partition::from_assignment(self.assignment.iter().map(|(u, &c)| (u.clone(), c)))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            (0..points.len()).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen
}

/// Lloyd's algorithm with k-means++ seeding over Euclidean label vectors.
/// Users are processed in id order, so input order does not matter.
pub fn kmeans_cluster(vectors: &[LabelVector], k: usize, seed: u64) -> Result<KMeansResult> {
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut sorted: Vec<&LabelVector> = vectors.iter().collect();
    sorted.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].user_id == w[1].user_id) {
        return Err(Error::InvalidInput(format!("user `{}` has two label vectors", w[0].user_id)));
    }
    let labels: Vec<String> = sorted
        .iter()
        .flat_map(|v| v.weights.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let points: Vec<Vec<f64>> = sorted
        .iter()
        .map(|v| {
            let mut p = vec![0.0; labels.len()];
            for (l, &w) in &v.weights {
                p[index[l.as_str()]] = w;
            }
            p
        })
        .collect();
    let distinct = {
        let mut ps: Vec<&Vec<f64>> = points.iter().collect();
        ps.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        ps.dedup();
        ps.len()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = plus_plus_init(&points, k, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let mut assign: Vec<usize> = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < KMEANS_MAX_ITERATIONS {
        let fresh: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
        iterations += 1;
        history.push(fresh.iter().map(|f| f.1).sum());
        let changed = fresh.iter().zip(&assign).any(|(f, &a)| f.0 != a);
        for (a, f) in assign.iter_mut().zip(&fresh) {
            *a = f.0;
        }
        if !changed {
            converged = true;
            break;
        }
        update_centroids(&points, &assign, &mut centroids);
    }
    Ok(KMeansResult {
        k,
        seed,
        labels,
        centroids,
        assignment: sorted.iter().zip(&assign).map(|(v, &c)| (v.user_id.clone(), c)).collect(),
        objective_history: history,
        iterations,
        converged,
        degenerate: distinct < k,
    })
}

/// Moves each centroid to its members' mean, keeping the old position if
/// rounding would make the cluster's cost worse. Empty clusters take the
/// point farthest from its centroid.
fn update_centroids(points: &[Vec<f64>], assign: &[usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (p, &c) in points.iter().zip(assign) {
        sizes[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for c in 0..k {
        if sizes[c] == 0 {
            continue;
        }
        let mean: Vec<f64> = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
        let cost = |q: &[f64]| -> f64 {
            points
                .iter()
                .zip(assign)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| sq_dist(p, q))
                .sum()
        };
        if cost(&mean) <= cost(&centroids[c]) {
            centroids[c] = mean;
        }
    }
    let mut taken = BTreeSet::new();
    for c in (0..k).filter(|&c| sizes[c] == 0) {
        let far = points
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken.contains(i))
            .map(|(i, p)| (i, sq_dist(p, &centroids[assign[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = far {
            taken.insert(i);
            centroids[c] = points[i].clone();
        }
    }
}

fn comb2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Adjusted Rand index between two labelings of the same users. Two
/// identical trivial labelings score 1.
pub fn adjusted_rand_index(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> Result<f64> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(Error::InvalidInput("labelings cover different users".into()));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (u, &ca) in a {
        let cb = b[u];
        *table.entry((ca, cb)).or_insert(0) += 1;
        *rows.entry(ca).or_insert(0) += 1;
        *cols.entry(cb).or_insert(0) += 1;
    }
    let index = table.values().map(|&n| comb2(n)).sum::<u64>() as f64;
    let sa = rows.values().map(|&n| comb2(n)).sum::<u64>() as f64;
    let sb = cols.values().map(|&n| comb2(n)).sum::<u64>() as f64;
    let total = comb2(a.len() as u64) as f64;
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Directed follow graph over every user in the dataset.
pub fn follow_graph(dataset: &Dataset) -> SocialGraph {
    let mut g = SocialGraph::directed(dataset.users().iter().map(|u| u.user_id.clone()));
    for f in dataset.follows() {
        for id in [&f.follower, &f.followee] {
            if !g.nodes().contains(id) {
                g.add_node(id.clone());
            }
        }
        g.add_edge(&f.follower, &f.followee, 1.0).expect("follow endpoints are nodes");
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VipFollow {
    pub vip: UserId,
    /// Share of cluster members following the VIP.
    pub inside: f64,
    /// Share of non-members in the population following the VIP; `None` when
    /// every population member is in the cluster.
    pub outside: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohesion {
    pub size: usize,
    pub internal_edges: usize,
    /// `None` for clusters with fewer than two members.
    pub density: Option<f64>,
    pub average_clustering: Option<f64>,
    pub vip_follow: Vec<VipFollow>,
}

/// Cohesion of `cluster` in the undirected follow graph. VIP shares compare
/// members against the rest of `population`.
pub fn cluster_cohesion(
    cluster: &BTreeSet<UserId>,
    population: &BTreeSet<UserId>,
    follows: &SocialGraph,
    dataset: &Dataset,
) -> Cohesion {
    let members: BTreeSet<&str> = cluster
        .iter()
        .map(String::as_str)
        .filter(|u| follows.nodes().contains(*u))
        .collect();
    let sub = follows.to_undirected().induced(members.iter().copied());
    let n = cluster.len();
    let internal_edges = sub.edge_count();
    let density = (n >= 2).then(|| internal_edges as f64 / (n * (n - 1) / 2) as f64);
    let average_clustering = average_clustering_coefficient(&sub).ok().filter(|_| n > 0);
    let outsiders: Vec<&str> = population
        .iter()
        .map(String::as_str)
        .filter(|u| !cluster.contains(*u))
        .collect();
    let vip_follow = dataset
        .users()
        .iter()
        .filter(|u| u.is_vip)
        .map(|v| {
            let follows_vip = |u: &str| follows.has_edge(u, &v.user_id);
            let inside = cluster.iter().filter(|u| follows_vip(u)).count();
            let outside = outsiders.iter().filter(|u| follows_vip(u)).count();
            VipFollow {
                vip: v.user_id.clone(),
                inside: if n == 0 { 0.0 } else { inside as f64 / n as f64 },
                outside: (!outsiders.is_empty()).then(|| outside as f64 / outsiders.len() as f64),
            }
        })
        .collect();
    Cohesion {
        size: n,
        internal_edges,
        density,
        average_clustering,
        vip_follow,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipationReport {
    pub rows: Vec<PiRow>,
    pub known: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAspect {
    /// Non-VIP corpus authors; the denominator of every table below.
    pub users: usize,
    pub ages: AgeHistogram,
    pub participation: Option<ParticipationReport>,
    pub clustering: Option<KMeansResult>,
    pub cohesion: Vec<Cohesion>,
    pub notes: Vec<String>,
}

/// Runs the user-aspect analyses over non-VIP authors of the given corpora.
pub fn user_profile(corpora: &[ShowCorpus], dataset: &Dataset, k: usize, seed: u64) -> UserAspect {
    let mut notes = Vec::new();
    let authors: BTreeSet<&str> = corpora
        .iter()
        .flat_map(|c| c.authors(dataset))
        .filter(|u| !dataset.user(u).is_some_and(|p| p.is_vip))
        .collect();
    let ages = age_histogram(authors.iter().copied(), dataset);
    let (counts, unknown_regions) = region_counts(authors.iter().copied(), dataset);
    let known_regions = authors.len() - unknown_regions;
    let participation = match participation_index(&counts) {
        Ok(rows) => Some(ParticipationReport {
            rows,
            known: known_regions,
            unknown: unknown_regions,
        }),
        Err(e) => {
            notes.push(format!("participation index: {e}"));
            None
        }
    };
    let vectors: Vec<LabelVector> = user_label_vectors(corpora, dataset)
        .into_iter()
        .filter(|v| authors.contains(v.user_id.as_str()))
        .collect();
    let clustering = match kmeans_cluster(&vectors, k, seed) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("clustering: {e}"));
            None
        }
    };
    let cohesion = clustering
        .as_ref()
        .map(|r| {
            let follows = follow_graph(dataset);
            let population: BTreeSet<UserId> = r.assignment.keys().cloned().collect();
            (0..r.k)
                .map(|c| {
                    let members: BTreeSet<UserId> = r
                        .assignment
                        .iter()
                        .filter(|(_, &a)| a == c)
                        .map(|(u, _)| u.clone())
                        .collect();
                    cluster_cohesion(&members, &population, &follows, dataset)
                })
                .collect()
        })
        .unwrap_or_default();
    UserAspect {
        users: authors.len(),
        ages,
        participation,
        clustering,
        cohesion,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{mb, show, user};
    use crate::model::{FollowEdge, UserProfile};

    fn aged(id: &str, age: Option<u32>, region: Option<&str>) -> UserProfile {
        UserProfile {
            age,
            region: region.map(str::to_string),
            ..user(id)
        }
    }

    #[test]
    fn age_examples() {
        let d = Dataset::new(
            vec![],
            vec![aged("a", Some(20), None), aged("b", Some(20), None), aged("c", Some(20), None)],
            vec![],
            vec![],
        );
        assert_eq!(age_histogram(["a", "b", "c"], &d).mean, Some(20.0));
        let d = Dataset::new(vec![], vec![aged("a", Some(10), None), aged("b", Some(30), None), aged("c", None, None)], vec![], vec![]);
        let h = age_histogram(["a", "b", "c"], &d);
        assert_eq!(h.mean, Some(20.0));
        assert_eq!(h.bins, BTreeMap::from([(10, 1), (30, 1)]));
        assert_eq!((h.known, h.unknown), (2, 1));
        let h = age_histogram(["c", "ghost"], &d);
        assert!(h.bins.is_empty() && h.mean.is_none());
        assert_eq!(h.unknown, 2);
    }

    fn counts(values: &[u64]) -> Vec<RegionCount> {
        values
            .iter()
            .enumerate()
            .map(|(i, &un)| RegionCount {
                region: format!("r{:02}", i + 1),
                un,
            })
            .collect()
    }

    #[test]
    fn pi_examples() {
        let rows = participation_index(&counts(&[300, 200, 190, 180, 170, 160, 150, 140, 120, 100, 50])).unwrap();
        assert_eq!(rows[0].pi, 2.0);
        assert_eq!(rows[9].pi, 0.0);
        assert_eq!(rows[10].pi, -0.5);
        let rows = participation_index(&counts(&[200, 100, 100, 100, 100, 100, 100, 100, 100, 100])).unwrap();
        assert_eq!(rows[0].pi, 1.0);
        assert!(rows[1..].iter().all(|r| r.pi == 0.0));
    }

    #[test]
    fn pi_tie_break_by_region() {
        let mut c = counts(&[5; 12]);
        c.reverse();
        let rows = participation_index(&c).unwrap();
        assert_eq!(rows[9].region, "r10");
        assert_eq!(rows[11].region, "r12");
    }

    #[test]
    fn pi_errors() {
        assert!(participation_index(&counts(&[1; 9])).is_err());
        assert!(participation_index(&counts(&[5, 5, 5, 5, 5, 5, 5, 5, 5, 0, 0])).is_err());
        let mut c = counts(&[1; 10]);
        c[3].region = "r01".into();
        assert!(participation_index(&c).is_err());
    }

    fn label_fixture() -> (Dataset, Vec<ShowCorpus>) {
        let shows = vec![
            show("v1", ["Love", "Idol", "Modern"], &["one"]),
            show("v2", ["War", "Love", "Historical"], &["two"]),
            show("v3", ["Love", "Idol", "Modern"], &["three"]),
        ];
        let d = Dataset::new(
            vec![
                mb("m1", "u1", 1, None, "one"),
                mb("m2", "u1", 2, None, "one again"),
                mb("m3", "u1", 3, None, "two"),
                mb("m4", "u2", 4, None, "one"),
                mb("m5", "u3", 5, None, "one"),
                mb("m6", "u3", 6, None, "three"),
            ],
            vec![user("u1"), user("u2"), user("u3")],
            vec![],
            shows,
        );
        let corpora = crate::retrieval::retrieve_all(&d).unwrap();
        (d, corpora)
    }

    #[test]
    fn label_vector_examples() {
        let (d, corpora) = label_fixture();
        let v = user_label_vector("u1", &corpora, &d).unwrap();
        let expect = [("Love", 3.0 / 9.0), ("Idol", 2.0 / 9.0), ("Modern", 2.0 / 9.0), ("War", 1.0 / 9.0), ("Historical", 1.0 / 9.0)];
        for (l, w) in expect {
            assert!((v.weights[l] - w).abs() < 1e-15, "{l}");
        }
        let single = user_label_vector("u2", &corpora, &d).unwrap();
        assert!(single.weights.values().all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
        let twin = user_label_vector("u3", &corpora, &d).unwrap();
        assert_eq!(twin.weights, single.weights);
        assert!(matches!(user_label_vector("nobody", &corpora, &d), Err(Error::NoAttributedPosts(_))));
        assert_eq!(user_label_vectors(&corpora, &d).len(), 3);
    }

    fn lv(id: &str, w: &[(&str, f64)]) -> LabelVector {
        LabelVector {
            user_id: id.into(),
            weights: w.iter().map(|(l, x)| (l.to_string(), *x)).collect(),
        }
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let vs = vec![lv("a", &[("x", 1.0)]), lv("b", &[("y", 1.0)]), lv("c", &[("x", 0.5), ("y", 0.5)])];
        let r = kmeans_cluster(&vs, 1, 3).unwrap();
        assert!(r.assignment.values().all(|&c| c == 0));
        assert!((r.centroids[0][0] - 0.5).abs() < 1e-15 && (r.centroids[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kmeans_two_groups() {
        let mut vs = Vec::new();
        for i in 0..10 {
            vs.push(lv(&format!("a{i}"), &[("x", 1.0)]));
            vs.push(lv(&format!("b{i}"), &[("y", 0.5), ("z", 0.5)]));
        }
        let r = kmeans_cluster(&vs, 2, 11).unwrap();
        let truth: BTreeMap<String, usize> = r.assignment.keys().map(|u| (u.clone(), usize::from(u.starts_with('b')))).collect();
        assert_eq!(adjusted_rand_index(&r.assignment, &truth).unwrap(), 1.0);
        assert!(r.converged && !r.degenerate);
        assert!(r.objective_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn kmeans_identical_vectors() {
        let vs: Vec<_> = (0..6).map(|i| lv(&format!("u{i}"), &[("x", 1.0)])).collect();
        let r = kmeans_cluster(&vs, 2, 1).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.objective(), 0.0);
        assert!(r.assignment.values().all(|&c| c == 0));
    }

    #[test]
    fn kmeans_errors_and_order() {
        let vs = vec![lv("a", &[("x", 1.0)]), lv("b", &[("y", 1.0)])];
        assert!(matches!(kmeans_cluster(&vs, 0, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(kmeans_cluster(&vs, 3, 0), Err(Error::KOutOfRange { .. })));
        let mut rev = vs.clone();
        rev.reverse();
        assert_eq!(kmeans_cluster(&vs, 2, 5).unwrap(), kmeans_cluster(&rev, 2, 5).unwrap());
    }

    #[test]
    fn ari_known_values() {
        let m = |v: &[usize]| -> BTreeMap<String, usize> { v.iter().enumerate().map(|(i, &c)| (format!("u{i}"), c)).collect() };
        assert_eq!(adjusted_rand_index(&m(&[0, 0, 1, 1]), &m(&[1, 1, 0, 0])).unwrap(), 1.0);
        // contingency [[1,1],[1,1]]: index 0, expected 2·2/6, max 2
        let ari = adjusted_rand_index(&m(&[0, 0, 1, 1]), &m(&[0, 1, 0, 1])).unwrap();
        assert!((ari - (0.0 - 2.0 / 3.0) / (2.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert!(adjusted_rand_index(&m(&[0]), &m(&[0, 1])).is_err());
    }

    fn follow(a: &str, b: &str) -> FollowEdge {
        FollowEdge {
            follower: a.into(),
            followee: b.into(),
        }
    }

    #[test]
    fn cohesion_examples() {
        let mut users: Vec<UserProfile> = ["a", "b", "c", "d", "e", "f"].iter().map(|u| user(u)).collect();
        users.push(UserProfile {
            is_vip: true,
            ..user("hunan")
        });
        users.push(UserProfile {
            is_vip: true,
            ..user("other")
        });
        let mut follows = Vec::new();
        for (i, a) in ["a", "b", "c", "d"].iter().enumerate() {
            for b in ["a", "b", "c", "d"].iter().skip(i + 1) {
                follows.push(follow(a, b));
            }
            follows.push(follow(a, "hunan"));
        }
        let d = Dataset::new(vec![], users, follows, vec![]);
        let g = follow_graph(&d);
        let set = |v: &[&str]| -> BTreeSet<UserId> { v.iter().map(|s| s.to_string()).collect() };
        let pop = set(&["a", "b", "c", "d", "e", "f"]);
        let k4 = cluster_cohesion(&set(&["a", "b", "c", "d"]), &pop, &g, &d);
        assert_eq!(k4.density, Some(1.0));
        assert_eq!(k4.average_clustering, Some(1.0));
        assert_eq!(k4.vip_follow[0].vip, "hunan");
        assert_eq!((k4.vip_follow[0].inside, k4.vip_follow[0].outside), (1.0, Some(0.0)));
        assert_eq!((k4.vip_follow[1].inside, k4.vip_follow[1].outside), (0.0, Some(0.0)));
        let loose = cluster_cohesion(&set(&["e", "f"]), &pop, &g, &d);
        assert_eq!(loose.density, Some(0.0));
        let single = cluster_cohesion(&set(&["e"]), &pop, &g, &d);
        assert_eq!(single.density, None);
    }
}
