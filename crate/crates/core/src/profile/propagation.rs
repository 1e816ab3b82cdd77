//! Propagation aspect: audience overlap between broadcast rounds and user
//! flow from one show to another.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphkit::{EdgeRecord, SocialGraph};
use crate::model::{Dataset, Microblog, ShowId, Timestamp, TvShow, UserId};
use crate::retrieval::ShowCorpus;

pub const DEFAULT_WINDOW: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOverlap {
    pub show_id: ShowId,
    pub only_first: usize,
    pub only_second: usize,
    pub both: usize,
}

/// Authors posting in the first round only, the second only, or both.
/// Posts outside both rounds are ignored.
pub fn round_overlap(show: &TvShow, corpus: &ShowCorpus, dataset: &Dataset) -> Result<RoundOverlap> {
    let [first, second, ..] = show.rounds.as_slice() else {
        return Err(Error::TooFewRounds {
            show_id: show.show_id.clone(),
            count: show.rounds.len(),
        });
    };
    let mut r1 = BTreeSet::new();
    let mut r2 = BTreeSet::new();
    for m in corpus.members.iter().filter_map(|id| dataset.microblog(id)) {
        if first.contains(m.timestamp) {
            r1.insert(m.author_id.as_str());
        }
        if second.contains(m.timestamp) {
            r2.insert(m.author_id.as_str());
        }
    }
    let both = r1.intersection(&r2).count();
    Ok(RoundOverlap {
        show_id: show.show_id.clone(),
        only_first: r1.len() - both,
        only_second: r2.len() - both,
        both,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Largest gap in seconds between two posts forming a transition.
    pub window: i64,
    /// Drop posts attributed to more than one show instead of counting every
    /// attributed pair.
    pub strict: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            window: DEFAULT_WINDOW,
            strict: false,
        }
    }
}

/// One user moving from `src` to `dst`; `timestamp` is that of the post on
/// `dst`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transition {
    pub user: UserId,
    pub src: ShowId,
    pub dst: ShowId,
    pub timestamp: Timestamp,
}

fn attribution<'a>(shows: &[TvShow], corpora: &'a [ShowCorpus]) -> BTreeMap<&'a str, BTreeSet<&'a str>> {
    let known: BTreeSet<&str> = shows.iter().map(|s| s.show_id.as_str()).collect();
    let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in corpora.iter().filter(|c| known.contains(c.show_id.as_str())) {
        for m in &c.members {
            out.entry(m.as_str()).or_default().insert(c.show_id.as_str());
        }
    }
    out
}

/// Every transition in the trace, sorted. Returns the transitions and the
/// number of multi-show posts seen.
pub fn transitions(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    opts: PropagationOptions,
) -> Result<(Vec<Transition>, usize)> {
    if opts.window <= 0 {
        return Err(Error::InvalidInput(format!("window must be positive, got {}", opts.window)));
    }
    let att = attribution(shows, corpora);
    let ambiguous = att.values().filter(|s| s.len() > 1).count();
    let mut per_user: BTreeMap<&str, Vec<(&Microblog, &BTreeSet<&str>)>> = BTreeMap::new();
    for (id, s) in &att {
        if opts.strict && s.len() > 1 {
            continue;
        }
        if let Some(m) = dataset.microblog(id) {
            per_user.entry(m.author_id.as_str()).or_default().push((m, s));
        }
    }
    let users: Vec<_> = per_user.into_iter().collect();
    let mut out: Vec<Transition> = users
        .into_par_iter()
        .flat_map_iter(|(user, mut posts)| {
            posts.sort_by(|a, b| (a.0.timestamp, &a.0.id).cmp(&(b.0.timestamp, &b.0.id)));
            let mut found = Vec::new();
            for w in posts.windows(2) {
                let ((p, from), (q, to)) = (w[0], w[1]);
                if q.timestamp - p.timestamp > opts.window {
                    continue;
                }
                for a in from.iter() {
                    for b in to.iter().filter(|b| *b != a) {
                        found.push(Transition {
                            user: user.to_string(),
                            src: a.to_string(),
                            dst: b.to_string(),
                            timestamp: q.timestamp,
                        });
                    }
                }
            }
            found
        })
        .collect();
    out.sort();
    Ok((out, ambiguous))
}

fn graph_from<'a>(shows: &[TvShow], ts: impl IntoIterator<Item = &'a Transition>) -> SocialGraph {
    let mut users: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for t in ts {
        users.entry((&t.src, &t.dst)).or_default().insert(&t.user);
    }
    let mut g = SocialGraph::directed(shows.iter().map(|s| s.show_id.clone()));
    for ((a, b), u) in users {
        g.add_edge(a, b, u.len() as f64).expect("shows are nodes");
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationGraph {
    /// Directed, weighted by the number of distinct users moving.
    pub graph: SocialGraph,
    pub in_degree: BTreeMap<ShowId, usize>,
    pub options: PropagationOptions,
    pub ambiguous_posts: usize,
}

impl PropagationGraph {
    fn new(graph: SocialGraph, options: PropagationOptions, ambiguous_posts: usize) -> Self {
        let in_degree = graph.in_degrees().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        PropagationGraph {
            graph,
            in_degree,
            options,
            ambiguous_posts,
        }
    }
}

pub fn propagation_graph(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    opts: PropagationOptions,
) -> Result<PropagationGraph> {
    let (ts, ambiguous) = transitions(shows, corpora, dataset, opts)?;
    Ok(PropagationGraph::new(graph_from(shows, &ts), opts, ambiguous))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowGraph {
    pub start: Timestamp,
    pub end: Timestamp,
    pub graph: PropagationGraph,
}

/// Graphs over `count` consecutive periods `[from + i·W, from + (i+1)·W)`,
/// each holding the transitions whose destination post falls inside it.
pub fn windowed_propagation_graphs(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    opts: PropagationOptions,
    from: Timestamp,
    count: usize,
) -> Result<Vec<WindowGraph>> {
    let (ts, ambiguous) = transitions(shows, corpora, dataset, opts)?;
    Ok((0..count as i64)
        .map(|i| {
            let start = from + i * opts.window;
            let end = start + opts.window;
            let inside = ts.iter().filter(|t| (start..end).contains(&t.timestamp));
            WindowGraph {
                start,
                end,
                graph: PropagationGraph::new(graph_from(shows, inside), opts, ambiguous),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outflow {
    pub show_id: ShowId,
    pub users: usize,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutflow {
    pub start: Timestamp,
    pub end: Timestamp,
    /// Descending by users, ties by show id.
    pub ranking: Vec<Outflow>,
    pub total: usize,
    pub top: Option<ShowId>,
    pub top_share: Option<f64>,
    pub empty: bool,
}

/// Outgoing flow from `focus` in each window.
pub fn propagation_event_report(windows: &[WindowGraph], focus: &str, shows: &[TvShow]) -> Result<Vec<WindowOutflow>> {
    if windows.is_empty() {
        return Err(Error::InvalidInput("no windows".into()));
    }
    let labels: BTreeMap<&str, &Vec<String>> = shows.iter().map(|s| (s.show_id.as_str(), &s.labels)).collect();
    windows
        .iter()
        .map(|w| {
            let g = &w.graph.graph;
            if !g.nodes().contains(focus) {
                return Err(Error::UnknownShow(focus.to_string()));
            }
            let mut ranking: Vec<Outflow> = g
                .edges()
                .filter(|(a, _, _)| *a == focus)
                .map(|(_, b, wt)| Outflow {
                    show_id: b.to_string(),
                    users: wt as usize,
                    labels: labels.get(b).map(|l| l.to_vec()).unwrap_or_default(),
                })
                .collect();
            ranking.sort_by(|a, b| b.users.cmp(&a.users).then_with(|| a.show_id.cmp(&b.show_id)));
            let total: usize = ranking.iter().map(|o| o.users).sum();
            let top = ranking.first();
            Ok(WindowOutflow {
                start: w.start,
                end: w.end,
                top: top.map(|o| o.show_id.clone()),
                top_share: top.map(|o| o.users as f64 / total as f64),
                empty: ranking.is_empty(),
                total,
                ranking,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub from: Timestamp,
    pub count: usize,
    pub focus: Option<ShowId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationAspect {
    pub options: PropagationOptions,
    pub round_overlap: Vec<RoundOverlap>,
    pub edges: Vec<EdgeRecord>,
    pub in_degree: BTreeMap<ShowId, usize>,
    /// Posts in more than one corpus; dropped when `strict` is set.
    pub ambiguous_posts: usize,
    pub windows: Vec<WindowGraph>,
    pub events: Option<Vec<WindowOutflow>>,
    pub notes: Vec<String>,
}

pub fn propagation_profile(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    opts: PropagationOptions,
    windows: Option<&WindowSpec>,
) -> Result<PropagationAspect> {
    let mut notes = Vec::new();
    let by_show: BTreeMap<&str, &ShowCorpus> = corpora.iter().map(|c| (c.show_id.as_str(), c)).collect();
    let empty = ShowCorpus::empty("");
    let mut overlaps = Vec::new();
    for s in shows {
        let corpus = by_show.get(s.show_id.as_str()).copied().unwrap_or(&empty);
        match round_overlap(s, corpus, dataset) {
            Ok(r) => overlaps.push(r),
            Err(e) => notes.push(format!("round overlap: {e}")),
        }
    }
    let whole = propagation_graph(shows, corpora, dataset, opts)?;
    let (windows, events) = match windows {
        Some(w) => {
            let graphs = windowed_propagation_graphs(shows, corpora, dataset, opts, w.from, w.count)?;
            let events = match &w.focus {
                Some(f) if !graphs.is_empty() => Some(propagation_event_report(&graphs, f, shows)?),
                _ => None,
            };
            (graphs, events)
        }
        None => (Vec::new(), None),
    };
    Ok(PropagationAspect {
        options: opts,
        round_overlap: overlaps,
        edges: whole.graph.edge_records(),
        in_degree: whole.in_degree,
        ambiguous_posts: whole.ambiguous_posts,
        windows,
        events,
        notes,
    })
}
