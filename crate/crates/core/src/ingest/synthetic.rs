//! Seeded synthetic traces with planted ground truth.
//!
//! Content is drawn from a closed vocabulary: neutral filler words, the
//! built-in sentiment lexicons, and per-show topic strings (`Drama007`,
//! `Role007b`, ...). No filler or topic string contains a lexicon entry or
//! another topic string, so retrieval and sentiment results are exactly
//! predictable from the generator's choices.
//!
//! Timeline layout:
//! * every unplanted author posts at least [`QUIET_GAP`] seconds apart, so a
//!   propagation window shorter than that sees only planted transitions;
//! * planted transition pairs start after all unplanted activity and are
//!   spaced [`PLANT_SEPARATION`] apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Dataset, FollowEdge, Microblog, MicroblogId, Round, SentimentLabel, ShowId, Timestamp, TvShow,
    UserId, UserProfile,
};
use crate::profile::content::{NEGATIVE_WORDS, POSITIVE_WORDS};

/// 2011-06-01T00:00:00Z.
pub const TRACE_START: Timestamp = 1_306_886_400;
/// Minimum spacing between consecutive posts of any unplanted author.
pub const QUIET_GAP: i64 = 2 * 86_400;
/// Spacing between successive planted transition pairs of one user.
pub const PLANT_SEPARATION: i64 = 60 * 86_400;

const NOISE_FRACTION: f64 = 0.15;
const REPOST_FRACTION: f64 = 0.30;
const ACTOR_POST_FRACTION: f64 = 0.03;
const ACTOR_CROSSPOST_PROB: f64 = 0.3;
const VIP_COUNT: usize = 3;
const REGION_COUNT: usize = 20;

const CATEGORY_LABELS: [&str; 10] = [
    "Love", "Idol", "Costume", "Modern", "War", "Comedy", "Family", "Tragedy", "Suspense", "Historical",
];

pub(crate) const FILLER_WORDS: [&str; 24] = [
    "tonight", "episode", "watching", "finale", "scene", "plot", "cast", "music", "again", "weekend",
    "friends", "lol", "ending", "trailer", "channel", "replay", "season", "costume", "dialogue",
    "camera", "tv", "soundtrack", "rerun", "premiere",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentMix {
    pub positive: f64,
    pub negative: f64,
    pub non_sentiment: f64,
}

impl Default for SentimentMix {
    fn default() -> Self {
        SentimentMix {
            positive: 0.45,
            negative: 0.15,
            non_sentiment: 0.40,
        }
    }
}

impl SentimentMix {
    fn validate(&self) -> Result<()> {
        let p = [self.positive, self.negative, self.non_sentiment];
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InfeasibleSpec("sentiment probabilities must lie in [0, 1]".into()));
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleSpec("sentiment probabilities must sum to 1".into()));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> SentimentLabel {
        let u: f64 = rng.random();
        if u < self.positive {
            SentimentLabel::Positive
        } else if u < self.positive + self.negative {
            SentimentLabel::Negative
        } else {
            SentimentLabel::NonSentiment
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedTransition {
    pub user: UserId,
    pub show_from: ShowId,
    pub show_to: ShowId,
    pub gap_seconds: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_users: usize,
    pub n_shows: usize,
    pub n_microblogs: usize,
    pub planted_clusters: usize,
    #[serde(default)]
    pub planted_transitions: Vec<PlantedTransition>,
    #[serde(default)]
    pub sentiment_mix: SentimentMix,
}

impl SyntheticSpec {
    pub fn new(seed: u64, n_users: usize, n_shows: usize, n_microblogs: usize, planted_clusters: usize) -> Self {
        SyntheticSpec {
            seed,
            n_users,
            n_shows,
            n_microblogs,
            planted_clusters,
            planted_transitions: Vec::new(),
            sentiment_mix: SentimentMix::default(),
        }
    }

    pub fn show_id(i: usize) -> ShowId {
        format!("v{}", i + 1)
    }

    pub fn user_id(i: usize) -> UserId {
        format!("u{}", i + 1)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if self.n_users == 0 || self.n_shows == 0 || self.n_microblogs == 0 || self.planted_clusters == 0 {
            return bad("counts must be positive".into());
        }
        if self.planted_clusters > self.n_users {
            return bad(format!("{} clusters for {} users", self.planted_clusters, self.n_users));
        }
        if self.planted_clusters > self.n_shows {
            return bad(format!("{} clusters for {} shows", self.planted_clusters, self.n_shows));
        }
        if self.planted_clusters > label_triples().len() {
            return bad(format!("at most {} clusters are supported", label_triples().len()));
        }
        if self.n_microblogs < 2 * self.planted_transitions.len() {
            return bad("too few microblogs for the planted transitions".into());
        }
        self.sentiment_mix.validate()?;
        let shows: BTreeSet<ShowId> = (0..self.n_shows).map(Self::show_id).collect();
        for t in &self.planted_transitions {
            if t.user.is_empty() {
                return bad("planted transition with empty user id".into());
            }
            if !shows.contains(&t.show_from) || !shows.contains(&t.show_to) {
                return bad(format!("planted transition references unknown show: {t:?}"));
            }
            if t.show_from == t.show_to {
                return bad(format!("planted transition from a show to itself: {t:?}"));
            }
            if t.gap_seconds <= 0 || t.gap_seconds >= QUIET_GAP {
                return bad(format!("planted gap must lie in (0, {QUIET_GAP}): {t:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedEdge {
    pub src: ShowId,
    pub dst: ShowId,
    /// Distinct users planted on this transition.
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Shows each on-topic microblog was generated for (noise posts absent).
    pub attribution: BTreeMap<MicroblogId, BTreeSet<ShowId>>,
    pub sentiment: BTreeMap<MicroblogId, SentimentLabel>,
    /// Preference cluster of every unplanted viewer.
    pub user_cluster: BTreeMap<UserId, usize>,
    /// Shows belonging to each cluster; all shows of a cluster share labels.
    pub cluster_shows: Vec<Vec<ShowId>>,
    pub planted_edges: Vec<PlantedEdge>,
    /// Planted edges are exact for windows in `[max planted gap, quiet_gap)`.
    pub quiet_gap: i64,
}

pub fn write_ground_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut body = serde_json::to_string_pretty(truth)?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn label_triples() -> Vec<[usize; 3]> {
    // disjoint triples first so small cluster counts are maximally separated
    let mut out = vec![[0, 1, 2], [3, 4, 5], [6, 7, 8]];
    for a in 0..10 {
        for b in a + 1..10 {
            for c in b + 1..10 {
                if !out.contains(&[a, b, c]) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

pub(crate) fn show_title(i: usize) -> String {
    format!("Drama{:03}", i + 1)
}

pub(crate) fn show_roles(i: usize) -> [String; 3] {
    ["a", "b", "c"].map(|s| format!("Role{:03}{s}", i + 1))
}

fn actor_account(i: usize) -> UserId {
    format!("actor{}", i + 1)
}

fn vip_id(i: usize) -> UserId {
    format!("vip{}", i + 1)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Author {
    Viewer(usize),
    Actor(usize),
}

struct Slot {
    ts: Timestamp,
    author: Author,
}

struct Builder {
    rng: ChaCha8Rng,
    microblogs: Vec<Microblog>,
    truth: GroundTruth,
    /// Attributed microblogs per show, in creation (chronological) order.
    by_show: Vec<Vec<usize>>,
    show_index: BTreeMap<ShowId, usize>,
}

impl Builder {
    fn content(&mut self, topic: Option<&str>, label: SentimentLabel) -> String {
        let mut words: Vec<String> = Vec::new();
        let fillers = self.rng.random_range(2..=4);
        for _ in 0..fillers {
            words.push(FILLER_WORDS.choose(&mut self.rng).unwrap().to_string());
        }
        let lexicon: &[&str] = match label {
            SentimentLabel::Positive => &POSITIVE_WORDS,
            SentimentLabel::Negative => &NEGATIVE_WORDS,
            SentimentLabel::NonSentiment => &[],
        };
        if !lexicon.is_empty() {
            let hits = self.rng.random_range(1..=2);
            for _ in 0..hits {
                words.push(lexicon.choose(&mut self.rng).unwrap().to_string());
            }
        }
        words.shuffle(&mut self.rng);
        if let Some(t) = topic {
            let at = self.rng.random_range(0..=words.len());
            words.insert(at, t.to_string());
        }
        words.join(" ")
    }

    fn topic_for(&mut self, show: usize) -> String {
        if self.rng.random_bool(0.5) {
            show_title(show)
        } else {
            show_roles(show).choose(&mut self.rng).unwrap().clone()
        }
    }

    fn push(
        &mut self,
        author: &str,
        ts: Timestamp,
        root: Option<usize>,
        content: String,
        label: SentimentLabel,
        shows: BTreeSet<usize>,
    ) -> usize {
        let idx = self.microblogs.len();
        let id = format!("m{:07}", idx + 1);
        let ip = format!(
            "10.{}.{}.{}",
            self.rng.random_range(0..=255u8),
            self.rng.random_range(0..=255u8),
            self.rng.random_range(1..=254u8)
        );
        self.microblogs.push(Microblog {
            id: id.clone(),
            author_id: author.to_string(),
            author_name: format!("name-{author}"),
            author_ip: ip,
            timestamp: ts,
            root_id: root.map(|r| self.microblogs[r].id.clone()),
            content,
        });
        self.truth.sentiment.insert(id.clone(), label);
        if !shows.is_empty() {
            for &s in &shows {
                self.by_show[s].push(idx);
            }
            let names = shows.iter().map(|&s| SyntheticSpec::show_id(s)).collect();
            self.truth.attribution.insert(id, names);
        }
        idx
    }

    fn attribution_of(&self, idx: usize) -> BTreeSet<usize> {
        self.truth
            .attribution
            .get(&self.microblogs[idx].id)
            .map(|s| s.iter().map(|id| self.show_index[id]).collect())
            .unwrap_or_default()
    }
}

/// Generates a dataset and the facts planted in it. The same spec always
/// yields the same records.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let k = spec.planted_clusters;
    let triples = label_triples();

    let planted_users: BTreeSet<&str> = spec.planted_transitions.iter().map(|t| t.user.as_str()).collect();
    let viewer_ids: Vec<UserId> = (0..spec.n_users).map(SyntheticSpec::user_id).collect();
    let active_viewers: Vec<usize> = (0..spec.n_users)
        .filter(|&i| !planted_users.contains(viewer_ids[i].as_str()))
        .collect();

    let cluster_shows: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..spec.n_shows).filter(|s| s % k == c).collect())
        .collect();
    let show_cluster = |s: usize| s % k;
    let viewer_cluster = |u: usize| u % k;

    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        microblogs: Vec::with_capacity(spec.n_microblogs),
        truth: GroundTruth {
            attribution: BTreeMap::new(),
            sentiment: BTreeMap::new(),
            user_cluster: active_viewers
                .iter()
                .map(|&u| (viewer_ids[u].clone(), viewer_cluster(u)))
                .collect(),
            cluster_shows: cluster_shows
                .iter()
                .map(|ss| ss.iter().map(|&s| SyntheticSpec::show_id(s)).collect())
                .collect(),
            planted_edges: Vec::new(),
            quiet_gap: QUIET_GAP,
        },
        by_show: vec![Vec::new(); spec.n_shows],
        show_index: (0..spec.n_shows).map(|s| (SyntheticSpec::show_id(s), s)).collect(),
    };

    // --- posting slots for unplanted authors
    let budget = spec.n_microblogs - 2 * spec.planted_transitions.len();
    let actor_posts = if active_viewers.is_empty() {
        budget
    } else {
        ((budget as f64 * ACTOR_POST_FRACTION).round() as usize).min(budget)
    };
    let viewer_posts = budget - actor_posts;
    let mut per_author: Vec<(Author, usize)> = Vec::new();
    if !active_viewers.is_empty() {
        for (j, &u) in active_viewers.iter().enumerate() {
            let n = viewer_posts / active_viewers.len() + usize::from(j < viewer_posts % active_viewers.len());
            per_author.push((Author::Viewer(u), n));
        }
    }
    for s in 0..spec.n_shows {
        let n = actor_posts / spec.n_shows + usize::from(s < actor_posts % spec.n_shows);
        per_author.push((Author::Actor(s), n));
    }
    let mut slots = Vec::with_capacity(budget);
    let mut last_ts = TRACE_START;
    for &(author, n) in &per_author {
        let mut t = TRACE_START + b.rng.random_range(0..QUIET_GAP);
        for _ in 0..n {
            slots.push(Slot { ts: t, author });
            last_ts = last_ts.max(t);
            t += QUIET_GAP + b.rng.random_range(0..QUIET_GAP);
        }
    }
    slots.sort_by_key(|s| {
        (
            s.ts,
            match s.author {
                Author::Viewer(u) => (0, u),
                Author::Actor(a) => (1, a),
            },
        )
    });

    for slot in &slots {
        let label = spec.sentiment_mix.draw(&mut b.rng);
        match slot.author {
            Author::Viewer(u) => {
                let author = viewer_ids[u].clone();
                let show = *cluster_shows[viewer_cluster(u)].choose(&mut b.rng).unwrap();
                let roll: f64 = b.rng.random();
                if roll < NOISE_FRACTION {
                    let content = b.content(None, label);
                    b.push(&author, slot.ts, None, content, label, BTreeSet::new());
                } else if roll < NOISE_FRACTION + REPOST_FRACTION && !b.by_show[show].is_empty() {
                    let root = *b.by_show[show].choose(&mut b.rng).unwrap();
                    let shows = b.attribution_of(root);
                    let content = b.content(None, label);
                    b.push(&author, slot.ts, Some(root), content, label, shows);
                } else {
                    let topic = b.topic_for(show);
                    let content = b.content(Some(&topic), label);
                    b.push(&author, slot.ts, None, content, label, BTreeSet::from([show]));
                }
            }
            Author::Actor(s) => {
                let mut shows = BTreeSet::from([s]);
                let topic = if spec.n_shows > 1 && b.rng.random_bool(ACTOR_CROSSPOST_PROB) {
                    let mut other = b.rng.random_range(0..spec.n_shows - 1);
                    if other >= s {
                        other += 1;
                    }
                    shows.insert(other);
                    Some(b.topic_for(other))
                } else {
                    None
                };
                let content = b.content(topic.as_deref(), label);
                b.push(&actor_account(s), slot.ts, None, content, label, shows);
            }
        }
    }

    // --- planted transitions, after all unplanted activity
    let plant_start = last_ts + PLANT_SEPARATION;
    let mut per_user_pairs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut edge_users: BTreeMap<(ShowId, ShowId), BTreeSet<&str>> = BTreeMap::new();
    for t in &spec.planted_transitions {
        let j = per_user_pairs.entry(&t.user).or_insert(0);
        let t0 = plant_start + *j as i64 * PLANT_SEPARATION;
        *j += 1;
        for (show_id, ts) in [(&t.show_from, t0), (&t.show_to, t0 + t.gap_seconds)] {
            let s = b.show_index[show_id];
            let label = spec.sentiment_mix.draw(&mut b.rng);
            let topic = show_title(s);
            let content = b.content(Some(&topic), label);
            b.push(&t.user, ts, None, content, label, BTreeSet::from([s]));
        }
        edge_users
            .entry((t.show_from.clone(), t.show_to.clone()))
            .or_default()
            .insert(&t.user);
    }
    b.truth.planted_edges = edge_users
        .into_iter()
        .map(|((src, dst), users)| PlantedEdge { src, dst, weight: users.len() })
        .collect();

    // --- users
    let mut rng = b.rng.clone();
    let age_dist: Normal<f64> = Normal::new(21.0, 4.0).expect("valid normal");
    let region_weights: Vec<f64> = (1..=REGION_COUNT).map(|r| 1.0 / r as f64).collect();
    let region_total: f64 = region_weights.iter().sum();
    let demographic = |rng: &mut ChaCha8Rng, id: UserId| {
        let age = rng
            .random_bool(0.85)
            .then(|| (age_dist.sample(rng).round() as i64).clamp(12, 60) as u32);
        let region = rng.random_bool(0.9).then(|| {
            let mut x = rng.random::<f64>() * region_total;
            let mut pick = REGION_COUNT - 1;
            for (i, w) in region_weights.iter().enumerate() {
                if x < *w {
                    pick = i;
                    break;
                }
                x -= w;
            }
            format!("r{:02}", pick + 1)
        });
        UserProfile {
            user_id: id,
            age,
            region,
            is_vip: false,
            synthetic: false,
        }
    };
    let mut users: Vec<UserProfile> = Vec::new();
    for id in &viewer_ids {
        users.push(demographic(&mut rng, id.clone()));
    }
    for s in 0..spec.n_shows {
        users.push(demographic(&mut rng, actor_account(s)));
    }
    for v in 0..VIP_COUNT {
        users.push(UserProfile {
            user_id: vip_id(v),
            age: None,
            region: None,
            is_vip: true,
            synthetic: false,
        });
    }
    let known: BTreeSet<UserId> = users.iter().map(|u| u.user_id.clone()).collect();
    for u in planted_users {
        if !known.contains(u) {
            users.push(demographic(&mut rng, u.to_string()));
        }
    }

    // --- follows
    let mut follows = BTreeSet::new();
    let mut follow = |a: &str, b: &str| {
        if a != b {
            follows.insert(FollowEdge {
                follower: a.to_string(),
                followee: b.to_string(),
            });
        }
    };
    let cluster_members: Vec<Vec<usize>> = (0..k)
        .map(|c| active_viewers.iter().copied().filter(|&u| viewer_cluster(u) == c).collect())
        .collect();
    for &u in &active_viewers {
        let c = viewer_cluster(u);
        if rng.random_bool(0.3) {
            follow(&viewer_ids[u], &vip_id(c % VIP_COUNT));
        }
        if rng.random_bool(0.25) {
            for _ in 0..rng.random_range(1..=3) {
                let v = *cluster_members[c].choose(&mut rng).unwrap();
                follow(&viewer_ids[u], &viewer_ids[v]);
            }
        }
        if rng.random_bool(0.1) {
            let s = *cluster_shows[c].choose(&mut rng).unwrap();
            follow(&viewer_ids[u], &actor_account(s));
        }
    }
    for s in 0..spec.n_shows {
        if spec.n_shows > 1 && rng.random_bool(0.5) {
            follow(&actor_account(s), &actor_account((s + 1) % spec.n_shows));
        }
    }

    // --- shows
    // the first round ends halfway through the unplanted activity
    let round_split = TRACE_START + (last_ts - TRACE_START) / 2 + 1;
    let span_end = plant_start + (spec.planted_transitions.len() as i64 + 1) * PLANT_SEPARATION;
    let shows: Vec<TvShow> = (0..spec.n_shows)
        .map(|s| {
            let triple = triples[show_cluster(s)];
            let title = show_title(s);
            let actors = vec![format!("Actor{:03}A", s + 1), format!("Actor{:03}B", s + 1)];
            let mut actor_accounts = BTreeMap::new();
            actor_accounts.insert(actors[0].clone(), Some(actor_account(s)));
            actor_accounts.insert(actors[1].clone(), None);
            let mut topics: BTreeSet<String> = show_roles(s).into_iter().collect();
            topics.insert(title.clone());
            TvShow {
                show_id: SyntheticSpec::show_id(s),
                title,
                labels: triple.iter().map(|&l| CATEGORY_LABELS[l].to_string()).collect(),
                actors,
                actor_accounts,
                topics,
                rounds: vec![
                    Round { start: TRACE_START, end: round_split },
                    Round { start: round_split, end: span_end },
                ],
                view_count: Some(rng.random_range(10_000..5_000_000)),
            }
        })
        .collect();

    let truth = b.truth;
    let dataset = Dataset::new(b.microblogs, users, follows.into_iter().collect(), shows);
    Ok((dataset, truth))
}
