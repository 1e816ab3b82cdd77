//! Social aspect: viewer topology, actor co-post and follow graphs, and
//! actor/fan influence on show corpora.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphkit::{connected_components, graph_intersection, sample_cdf, CdfPoint, EdgeRecord, SocialGraph};
use crate::model::{Dataset, ShowId, TvShow, UserId};
use crate::retrieval::ShowCorpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerTopology {
    pub authors: usize,
    pub isolated: usize,
    pub isolated_fraction: f64,
    pub connected_fraction: f64,
    /// component size → number of components, isolated authors included as
    /// size 1.
    pub component_sizes: BTreeMap<usize, usize>,
}

/// Topology of the undirected follow graph induced on the given authors.
pub fn viewer_topology_stats<'a>(authors: impl IntoIterator<Item = &'a str>, dataset: &Dataset) -> Result<ViewerTopology> {
    let authors: BTreeSet<&str> = authors.into_iter().collect();
    if authors.is_empty() {
        return Err(Error::EmptyCorpus("viewer topology".into()));
    }
    let mut g = SocialGraph::undirected(authors.iter().copied());
    for f in dataset.follows() {
        if authors.contains(f.follower.as_str()) && authors.contains(f.followee.as_str()) {
            g.add_edge(&f.follower, &f.followee, 1.0)?;
        }
    }
    let mut component_sizes = BTreeMap::new();
    for c in connected_components(&g) {
        *component_sizes.entry(c.len()).or_insert(0) += 1;
    }
    let isolated = component_sizes.get(&1).copied().unwrap_or(0);
    let isolated_fraction = isolated as f64 / authors.len() as f64;
    Ok(ViewerTopology {
        authors: authors.len(),
        isolated,
        isolated_fraction,
        // 1 − x keeps the two fractions summing to exactly 1
        connected_fraction: 1.0 - isolated_fraction,
        component_sizes,
    })
}

/// Every actor named in the catalog with the account linked to them, if any.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorDirectory {
    pub accounts: BTreeMap<String, Option<UserId>>,
}

impl ActorDirectory {
    pub fn from_shows(shows: &[TvShow]) -> Self {
        let mut accounts: BTreeMap<String, Option<UserId>> = BTreeMap::new();
        for s in shows {
            for a in &s.actors {
                let linked = s.actor_accounts.get(a).cloned().flatten();
                let slot = accounts.entry(a.clone()).or_insert(None);
                if slot.is_none() {
                    *slot = linked;
                }
            }
        }
        ActorDirectory { accounts }
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.accounts.keys()
    }

    pub fn account(&self, actor: &str) -> Option<&str> {
        self.accounts.get(actor).and_then(|a| a.as_deref())
    }

    /// Account → actor names using it.
    pub fn by_account(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (name, acc) in &self.accounts {
            if let Some(acc) = acc {
                out.entry(acc.as_str()).or_default().push(name.as_str());
            }
        }
        out
    }
}

/// `a1 → a2` when a1's account authored a post in the corpus of a show
/// casting a2.
pub fn actor_copost_digraph(shows: &[TvShow], corpora: &[ShowCorpus], dataset: &Dataset) -> SocialGraph {
    let dir = ActorDirectory::from_shows(shows);
    let by_account = dir.by_account();
    let cast: BTreeMap<&str, &TvShow> = shows.iter().map(|s| (s.show_id.as_str(), s)).collect();
    let mut g = SocialGraph::directed(dir.names().cloned());
    for c in corpora {
        let Some(show) = cast.get(c.show_id.as_str()) else { continue };
        let posters: BTreeSet<&str> = c
            .authors(dataset)
            .into_iter()
            .filter_map(|u| by_account.get(u))
            .flatten()
            .copied()
            .collect();
        for a1 in posters {
            for a2 in show.actors.iter().filter(|a2| a2.as_str() != a1) {
                g.add_edge(a1, a2, 1.0).expect("actors are nodes");
            }
        }
    }
    g
}

/// Undirected co-post graph over every catalog actor.
pub fn actor_copost_graph(shows: &[TvShow], corpora: &[ShowCorpus], dataset: &Dataset) -> SocialGraph {
    actor_copost_digraph(shows, corpora, dataset).to_undirected()
}

/// Undirected follow relations between actor accounts, over every catalog
/// actor.
pub fn actor_follow_graph(dataset: &Dataset, actors: &ActorDirectory) -> SocialGraph {
    let by_account = actors.by_account();
    let mut g = SocialGraph::undirected(actors.names().cloned());
    for f in dataset.follows() {
        let (Some(src), Some(dst)) = (by_account.get(f.follower.as_str()), by_account.get(f.followee.as_str())) else {
            continue;
        };
        for a in src {
            for b in dst.iter().filter(|b| *b != a) {
                g.add_edge(a, b, 1.0).expect("actors are nodes");
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRecord {
    pub actor: String,
    pub account: UserId,
    pub show_id: ShowId,
    pub actor_fraction: f64,
    pub fan_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InfluenceOutcome {
    pub records: Vec<InfluenceRecord>,
    /// Cast members skipped for lack of a linked account.
    pub unlinked: Vec<String>,
}

fn influence_with(
    show: &TvShow,
    corpus: &ShowCorpus,
    dataset: &Dataset,
    followers: &HashMap<&str, BTreeSet<&str>>,
) -> Result<InfluenceOutcome> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(show.show_id.clone()));
    }
    let mut per_author: BTreeMap<&str, usize> = BTreeMap::new();
    for m in corpus.members.iter().filter_map(|id| dataset.microblog(id)) {
        *per_author.entry(m.author_id.as_str()).or_insert(0) += 1;
    }
    let total = corpus.len() as f64;
    let none = BTreeSet::new();
    let mut out = InfluenceOutcome::default();
    for actor in &show.actors {
        let Some(account) = show.actor_accounts.get(actor).cloned().flatten() else {
            out.unlinked.push(actor.clone());
            continue;
        };
        let fans = followers.get(account.as_str()).unwrap_or(&none);
        let own = per_author.get(account.as_str()).copied().unwrap_or(0);
        let by_fans: usize = fans
            .iter()
            .filter(|f| **f != account)
            .filter_map(|f| per_author.get(f))
            .sum();
        out.records.push(InfluenceRecord {
            actor: actor.clone(),
            account,
            show_id: show.show_id.clone(),
            actor_fraction: own as f64 / total,
            fan_fraction: by_fans as f64 / total,
        });
    }
    Ok(out)
}

/// Shares of the corpus posted by each linked cast member and by their
/// direct followers.
pub fn actor_influence(show: &TvShow, corpus: &ShowCorpus, dataset: &Dataset) -> Result<InfluenceOutcome> {
    influence_with(show, corpus, dataset, &dataset.followers())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSummary {
    pub actor: String,
    pub shows: usize,
    pub mean_influence: f64,
    /// Population variance over the actor's shows.
    pub variance_influence: f64,
    pub fan_count: usize,
}

/// Per-actor mean and variance of `actor_fraction`, with the follower count
/// of the actor's account.
pub fn actor_influence_stats(records: &[InfluenceRecord], dataset: &Dataset) -> Vec<ActorSummary> {
    let followers = dataset.followers();
    let mut grouped: BTreeMap<&str, (&str, Vec<f64>)> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.actor.as_str())
            .or_insert_with(|| (r.account.as_str(), Vec::new()))
            .1
            .push(r.actor_fraction);
    }
    grouped
        .into_iter()
        .map(|(actor, (account, xs))| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            ActorSummary {
                actor: actor.to_string(),
                shows: xs.len(),
                mean_influence: mean,
                variance_influence: variance,
                fan_count: followers
                    .get(account)
                    .map_or(0, |f| f.iter().filter(|u| **u != account).count()),
            }
        })
        .collect()
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` for fewer
/// than two points or a constant series.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorGraphs {
    pub actors: usize,
    pub copost: Vec<EdgeRecord>,
    pub follow: Vec<EdgeRecord>,
    pub both: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialAspect {
    pub viewers: Option<ViewerTopology>,
    pub viewers_by_show: BTreeMap<ShowId, ViewerTopology>,
    pub actor_graphs: ActorGraphs,
    pub influence: Vec<InfluenceRecord>,
    pub actor_fraction_cdf: Vec<CdfPoint>,
    pub fan_fraction_cdf: Vec<CdfPoint>,
    pub actors: Vec<ActorSummary>,
    /// Rank correlation between fan count and mean influence.
    pub fans_vs_influence: Option<f64>,
    pub notes: Vec<String>,
}

pub fn social_profile(shows: &[TvShow], corpora: &[ShowCorpus], dataset: &Dataset) -> Result<SocialAspect> {
    let mut notes = Vec::new();
    let by_show: BTreeMap<&str, &ShowCorpus> = corpora.iter().map(|c| (c.show_id.as_str(), c)).collect();
    let all_authors: BTreeSet<&str> = corpora.iter().flat_map(|c| c.authors(dataset)).collect();
    let viewers = match viewer_topology_stats(all_authors.iter().copied(), dataset) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("viewer topology: {e}"));
            None
        }
    };
    let mut viewers_by_show = BTreeMap::new();
    for s in shows {
        if let Some(c) = by_show.get(s.show_id.as_str()).filter(|c| !c.is_empty()) {
            viewers_by_show.insert(s.show_id.clone(), viewer_topology_stats(c.authors(dataset), dataset)?);
        }
    }

    let directory = ActorDirectory::from_shows(shows);
    let copost = actor_copost_graph(shows, corpora, dataset);
    let follow = actor_follow_graph(dataset, &directory);
    let both = graph_intersection(&copost, &follow)?;

    let followers = dataset.followers();
    let outcomes: Vec<(ShowId, Result<InfluenceOutcome>)> = shows
        .par_iter()
        .map(|s| {
            let r = match by_show.get(s.show_id.as_str()) {
                Some(c) => influence_with(s, c, dataset, &followers),
                None => Err(Error::EmptyCorpus(s.show_id.clone())),
            };
            (s.show_id.clone(), r)
        })
        .collect();
    let mut influence = Vec::new();
    for (show_id, r) in outcomes {
        match r {
            Ok(o) => {
                for a in &o.unlinked {
                    notes.push(format!("influence: actor `{a}` of `{show_id}` has no linked account"));
                }
                influence.extend(o.records);
            }
            Err(e) => notes.push(format!("influence: {e}")),
        }
    }
    let actors = actor_influence_stats(&influence, dataset);
    let fans: Vec<f64> = actors.iter().map(|a| a.fan_count as f64).collect();
    let means: Vec<f64> = actors.iter().map(|a| a.mean_influence).collect();
    let actor_fractions: Vec<f64> = influence.iter().map(|r| r.actor_fraction).collect();
    let fan_fractions: Vec<f64> = influence.iter().map(|r| r.fan_fraction).collect();
    Ok(SocialAspect {
        viewers,
        viewers_by_show,
        actor_graphs: ActorGraphs {
            actors: copost.node_count(),
            copost: copost.edge_records(),
            follow: follow.edge_records(),
            both: both.edge_records(),
        },
        actor_fraction_cdf: sample_cdf(&actor_fractions),
        fan_fraction_cdf: sample_cdf(&fan_fractions),
        influence,
        fans_vs_influence: spearman(&fans, &means),
        actors,
        notes,
    })
}
