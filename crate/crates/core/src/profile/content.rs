//! Content aspect: lexicon sentiment tabulation and the show co-user network.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphkit::{
    self, degree_distribution, fit_shifted_power, louvain_communities, path_stats, random_graph_baseline,
    sample_cdf, BaselineStats, CdfPoint, CurveFit, DegreeDistribution, Partition, PathStats, SocialGraph,
};
use crate::model::{Dataset, SentimentLabel, ShowId, TvShow};
use crate::retrieval::{normalize_text, ShowCorpus};

pub const POSITIVE_WORDS: [&str; 8] = [
    "love", "great", "wonderful", "amazing", "touching", "brilliant", "excellent", "happy",
];
pub const NEGATIVE_WORDS: [&str; 8] = [
    "boring", "awful", "terrible", "disappointing", "hate", "annoying", "worst", "sad",
];

/// Degree cut used for the "share of shows above degree 40" statistic.
pub const HIGH_DEGREE_THRESHOLD: usize = 40;
const BASELINE_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentLexicons {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

impl SentimentLexicons {
    pub fn new<I, S>(positive: I, negative: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let lex = SentimentLexicons {
            positive: positive.into_iter().map(Into::into).collect(),
            negative: negative.into_iter().map(Into::into).collect(),
        };
        lex.validate()?;
        Ok(lex)
    }

    /// Small English lexicon, also the vocabulary of the synthetic generator.
    pub fn builtin() -> Self {
        SentimentLexicons::new(POSITIVE_WORDS, NEGATIVE_WORDS).expect("built-in lexicon is valid")
    }

    /// Reads `{"positive": [...], "negative": [...]}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lex: SentimentLexicons = serde_json::from_str(&text).map_err(|e| Error::Lexicon(e.to_string()))?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positive.is_empty() || self.negative.is_empty() {
            return Err(Error::Lexicon("both lexicons must be non-empty".into()));
        }
        let norm = |s: &BTreeSet<String>| -> Result<BTreeSet<String>> {
            s.iter()
                .map(|e| {
                    let n = normalize_text(e);
                    if n.is_empty() {
                        Err(Error::Lexicon("empty entry".into()))
                    } else {
                        Ok(n)
                    }
                })
                .collect()
        };
        let (p, n) = (norm(&self.positive)?, norm(&self.negative)?);
        if let Some(both) = p.intersection(&n).next() {
            return Err(Error::Lexicon(format!("`{both}` is in both lexicons")));
        }
        Ok(())
    }
}

/// Normalized lexicon entries, longest first.
pub struct SentimentClassifier {
    entries: Vec<(String, bool)>,
}

impl SentimentClassifier {
    pub fn new(lex: &SentimentLexicons) -> Self {
        let mut entries: Vec<(String, bool)> = lex
            .positive
            .iter()
            .map(|e| (normalize_text(e), true))
            .chain(lex.negative.iter().map(|e| (normalize_text(e), false)))
            .collect();
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        entries.dedup();
        SentimentClassifier { entries }
    }

    /// (positive, negative) hit counts under a left-to-right longest-match
    /// scan; matched spans never overlap.
    pub fn hits(&self, content: &str) -> (usize, usize) {
        let text = normalize_text(content);
        let (mut pos, mut neg) = (0, 0);
        let mut i = 0;
        while i < text.len() {
            let rest = &text[i..];
            match self.entries.iter().find(|(e, _)| rest.starts_with(e.as_str())) {
                Some((e, positive)) => {
                    if *positive {
                        pos += 1;
                    } else {
                        neg += 1;
                    }
                    i += e.len();
                }
                None => i += rest.chars().next().map_or(1, char::len_utf8),
            }
        }
        (pos, neg)
    }

    pub fn classify(&self, content: &str) -> SentimentLabel {
        let (pos, neg) = self.hits(content);
        match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => SentimentLabel::Positive,
            std::cmp::Ordering::Less => SentimentLabel::Negative,
            std::cmp::Ordering::Equal => SentimentLabel::NonSentiment,
        }
    }
}

pub fn classify_sentiment(content: &str, lex: &SentimentLexicons) -> SentimentLabel {
    SentimentClassifier::new(lex).classify(content)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentCounts {
    pub positive: usize,
    pub negative: usize,
    pub non_sentiment: usize,
}

impl SentimentCounts {
    pub fn add(&mut self, label: SentimentLabel) {
        match label {
            SentimentLabel::Positive => self.positive += 1,
            SentimentLabel::Negative => self.negative += 1,
            SentimentLabel::NonSentiment => self.non_sentiment += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.non_sentiment
    }

    /// (positive + negative) / total.
    pub fn emotional_fraction(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| (self.positive + self.negative) as f64 / t as f64)
    }

    /// positive / (positive + negative).
    pub fn positive_fraction(&self) -> Option<f64> {
        let s = self.positive + self.negative;
        (s > 0).then(|| self.positive as f64 / s as f64)
    }
}

/// Sentiment counts split by initial posts (no root) and reposts/comments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentTable {
    pub initial: SentimentCounts,
    pub repost: SentimentCounts,
}

impl SentimentTable {
    pub fn total(&self) -> usize {
        self.initial.total() + self.repost.total()
    }
}

fn tabulate(corpus: &ShowCorpus, dataset: &Dataset, clf: &SentimentClassifier) -> SentimentTable {
    let mut table = SentimentTable::default();
    for m in corpus.members.iter().filter_map(|id| dataset.microblog(id)) {
        let label = clf.classify(&m.content);
        if m.is_initial() {
            table.initial.add(label);
        } else {
            table.repost.add(label);
        }
    }
    table
}

pub fn sentiment_summary(corpus: &ShowCorpus, dataset: &Dataset, lex: &SentimentLexicons) -> SentimentTable {
    tabulate(corpus, dataset, &SentimentClassifier::new(lex))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveFractionRow {
    pub show_id: ShowId,
    pub positive: usize,
    pub negative: usize,
    /// positive / (positive + negative); `None` when the show has no
    /// sentiment-bearing posts.
    pub fraction: Option<f64>,
    pub view_count: Option<u64>,
    /// 1-based view rank; `None` for flagged rows.
    pub rank: Option<usize>,
}

/// Ranked rows (descending views, ties by show id) first, then flagged rows
/// lacking a fraction or a view count, by show id.
pub fn positive_fraction_table(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    lex: &SentimentLexicons,
) -> Vec<PositiveFractionRow> {
    let clf = SentimentClassifier::new(lex);
    let by_show: BTreeMap<&str, &ShowCorpus> = corpora.iter().map(|c| (c.show_id.as_str(), c)).collect();
    let mut rows: Vec<PositiveFractionRow> = shows
        .par_iter()
        .map(|s| {
            let counts = by_show
                .get(s.show_id.as_str())
                .map(|c| {
                    let t = tabulate(c, dataset, &clf);
                    SentimentCounts {
                        positive: t.initial.positive + t.repost.positive,
                        negative: t.initial.negative + t.repost.negative,
                        non_sentiment: t.initial.non_sentiment + t.repost.non_sentiment,
                    }
                })
                .unwrap_or_default();
            PositiveFractionRow {
                show_id: s.show_id.clone(),
                positive: counts.positive,
                negative: counts.negative,
                fraction: counts.positive_fraction(),
                view_count: s.view_count,
                rank: None,
            }
        })
        .collect();
    let ranked = |r: &PositiveFractionRow| r.fraction.is_some() && r.view_count.is_some();
    rows.sort_by(|a, b| {
        ranked(b)
            .cmp(&ranked(a))
            .then_with(|| match (ranked(a), ranked(b)) {
                (true, true) => b.view_count.cmp(&a.view_count),
                _ => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.show_id.cmp(&b.show_id))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        if r.fraction.is_some() && r.view_count.is_some() {
            r.rank = Some(i + 1);
        }
    }
    rows
}

/// Shows linked by shared corpus authors; edge weight is the number of
/// common authors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowNetwork {
    pub graph: SocialGraph,
    pub min_common_users: usize,
}

pub fn build_show_network(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    min_common_users: usize,
) -> ShowNetwork {
    let by_show: BTreeMap<&str, &ShowCorpus> = corpora.iter().map(|c| (c.show_id.as_str(), c)).collect();
    let authors: Vec<(&str, BTreeSet<&str>)> = shows
        .iter()
        .map(|s| {
            let a = by_show
                .get(s.show_id.as_str())
                .map(|c| c.authors(dataset))
                .unwrap_or_default();
            (s.show_id.as_str(), a)
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..authors.len())
        .flat_map(|i| (i + 1..authors.len()).map(move |j| (i, j)))
        .collect();
    let weights: Vec<usize> = pairs
        .par_iter()
        .map(|&(i, j)| authors[i].1.intersection(&authors[j].1).count())
        .collect();

    let mut graph = SocialGraph::undirected(shows.iter().map(|s| s.show_id.clone()));
    let threshold = min_common_users.max(1);
    for (&(i, j), &w) in pairs.iter().zip(&weights) {
        if w >= threshold {
            graph
                .add_edge(authors[i].0, authors[j].0, w as f64)
                .expect("show ids are graph nodes");
        }
    }
    ShowNetwork {
        graph,
        min_common_users: threshold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub partition: Partition,
    pub modularity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowNetworkProfile {
    pub min_common_users: usize,
    pub seed: u64,
    pub node_count: usize,
    pub edge_count: usize,
    pub degree: DegreeDistribution,
    pub high_degree_threshold: usize,
    pub fraction_above_threshold: Option<f64>,
    pub local_clustering: BTreeMap<String, f64>,
    pub clustering_cdf: Vec<CdfPoint>,
    pub average_clustering: f64,
    pub paths: Option<PathStats>,
    pub communities: Option<CommunityReport>,
    /// Fit of degree against ascending degree rank (x = rank, y = degree).
    pub degree_fit: Option<CurveFit>,
    pub random_baseline: Option<BaselineStats>,
    pub notes: Vec<String>,
}

/// Degree-rank points: nodes sorted by ascending degree (ties by id),
/// `x` = 1-based rank, `y` = degree.
pub fn degree_rank_points(g: &SocialGraph) -> Result<Vec<(f64, f64)>> {
    let mut d: Vec<(usize, String)> = graphkit::degrees(g)?.into_iter().map(|(n, k)| (k, n)).collect();
    d.sort();
    Ok(d.iter().enumerate().map(|(i, (k, _))| ((i + 1) as f64, *k as f64)).collect())
}

pub fn show_network_profile(net: &ShowNetwork, seed: u64) -> Result<ShowNetworkProfile> {
    let g = &net.graph;
    if g.node_count() == 0 {
        return Err(Error::InvalidInput("show network has no nodes".into()));
    }
    let mut notes = Vec::new();
    let degree = degree_distribution(g)?;
    let local_clustering = graphkit::local_clustering_coefficients(g)?;
    let clustering_values: Vec<f64> = local_clustering.values().copied().collect();
    let average_clustering = graphkit::average_clustering_coefficient(g)?;
    let paths = match path_stats(g) {
        Ok(p) => Some(p),
        Err(e) => {
            notes.push(format!("path length: {e}"));
            None
        }
    };
    let communities = match louvain_communities(g, seed) {
        Ok((partition, modularity)) => Some(CommunityReport { partition, modularity }),
        Err(e) => {
            notes.push(format!("communities: {e}"));
            None
        }
    };
    let degree_fit = match fit_shifted_power(&degree_rank_points(g)?) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("degree fit: {e}"));
            None
        }
    };
    let random_baseline = random_graph_baseline(g.node_count(), g.edge_count(), BASELINE_SAMPLES, seed ^ 0x5eed);
    Ok(ShowNetworkProfile {
        min_common_users: net.min_common_users,
        seed,
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        fraction_above_threshold: degree.fraction_above(HIGH_DEGREE_THRESHOLD),
        high_degree_threshold: HIGH_DEGREE_THRESHOLD,
        degree,
        clustering_cdf: sample_cdf(&clustering_values),
        local_clustering,
        average_clustering,
        paths,
        communities,
        degree_fit,
        random_baseline,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentAspect {
    /// Per-show tables; a post in several corpora counts once per show.
    pub sentiment: BTreeMap<ShowId, SentimentTable>,
    pub overall: SentimentTable,
    pub positive_fraction: Vec<PositiveFractionRow>,
    pub network: Option<ShowNetworkProfile>,
    pub notes: Vec<String>,
}

pub fn content_profile(
    shows: &[TvShow],
    corpora: &[ShowCorpus],
    dataset: &Dataset,
    lex: &SentimentLexicons,
    min_common_users: usize,
    seed: u64,
) -> ContentAspect {
    let clf = SentimentClassifier::new(lex);
    let known: BTreeSet<&str> = shows.iter().map(|s| s.show_id.as_str()).collect();
    let tables: Vec<(ShowId, SentimentTable)> = corpora
        .par_iter()
        .filter(|c| known.contains(c.show_id.as_str()))
        .map(|c| (c.show_id.clone(), tabulate(c, dataset, &clf)))
        .collect();
    let mut overall = SentimentTable::default();
    for (_, t) in &tables {
        for (sum, part) in [(&mut overall.initial, &t.initial), (&mut overall.repost, &t.repost)] {
            sum.positive += part.positive;
            sum.negative += part.negative;
            sum.non_sentiment += part.non_sentiment;
        }
    }
    let mut notes = Vec::new();
    let net = build_show_network(shows, corpora, dataset, min_common_users);
    let network = match show_network_profile(&net, seed) {
        Ok(p) => Some(p),
        Err(e) => {
            notes.push(format!("show network: {e}"));
            None
        }
    };
    ContentAspect {
        sentiment: tables.into_iter().collect(),
        overall,
        positive_fraction: positive_fraction_table(shows, corpora, dataset, lex),
        network,
        notes,
    }
}
