//! Domain records shared by every stage of the pipeline.
//!
//! A [`Dataset`] keeps each record collection sorted by id, so lookups are
//! binary searches and serialized output is independent of input order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub type MicroblogId = String;
pub type UserId = String;
pub type ShowId = String;

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Microblog {
    pub id: MicroblogId,
    pub author_id: UserId,
    pub author_name: String,
    /// Kept verbatim from the trace; no metric reads it.
    pub author_ip: String,
    pub timestamp: Timestamp,
    /// Original post when this record is a repost or comment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_id: Option<MicroblogId>,
    pub content: String,
}

impl Microblog {
    pub fn is_initial(&self) -> bool {
        self.root_id.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: UserId,
    #[serde(default)]
    pub age: Option<u32>,
    #[serde(default)]
    pub region: Option<String>,
    #[serde(default)]
    pub is_vip: bool,
    /// Set on stub profiles created for authors or follow endpoints that the
    /// users file does not describe.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

impl UserProfile {
    pub fn stub(user_id: impl Into<UserId>) -> Self {
        UserProfile {
            user_id: user_id.into(),
            age: None,
            region: None,
            is_vip: false,
            synthetic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: UserId,
    pub followee: UserId,
}

/// Half-open broadcast interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Round {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TvShow {
    pub show_id: ShowId,
    pub title: String,
    pub labels: Vec<String>,
    pub actors: Vec<String>,
    /// Actor name to microblogging account, when the actor has one.
    #[serde(default)]
    pub actor_accounts: BTreeMap<String, Option<UserId>>,
    pub topics: BTreeSet<String>,
    #[serde(default)]
    pub rounds: Vec<Round>,
    #[serde(default)]
    pub view_count: Option<u64>,
}

impl TvShow {
    /// Accounts linked to this show's cast, keyed by actor name.
    pub fn linked_accounts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.actor_accounts
            .iter()
            .filter_map(|(name, acct)| acct.as_deref().map(|a| (name.as_str(), a)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentimentLabel {
    Positive,
    Negative,
    NonSentiment,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Positive,
        SentimentLabel::Negative,
        SentimentLabel::NonSentiment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Negative => "negative",
            SentimentLabel::NonSentiment => "non_sentiment",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four record collections of a trace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    microblogs: Vec<Microblog>,
    users: Vec<UserProfile>,
    follows: Vec<FollowEdge>,
    shows: Vec<TvShow>,
}

impl Dataset {
    /// Assembles a dataset. Records are sorted by id (follows by pair) so
    /// that assembly is insensitive to input order. Duplicates are kept and
    /// reported by [`validate_dataset`].
    pub fn new(
        mut microblogs: Vec<Microblog>,
        mut users: Vec<UserProfile>,
        mut follows: Vec<FollowEdge>,
        mut shows: Vec<TvShow>,
    ) -> Self {
        microblogs.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.timestamp.cmp(&b.timestamp)));
        users.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        follows.sort();
        shows.sort_by(|a, b| a.show_id.cmp(&b.show_id));
        Dataset {
            microblogs,
            users,
            follows,
            shows,
        }
    }

    pub fn microblogs(&self) -> &[Microblog] {
        &self.microblogs
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn follows(&self) -> &[FollowEdge] {
        &self.follows
    }

    pub fn shows(&self) -> &[TvShow] {
        &self.shows
    }

    pub fn microblog(&self, id: &str) -> Option<&Microblog> {
        self.microblogs
            .binary_search_by(|m| m.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.microblogs[i])
    }

    pub fn user(&self, id: &str) -> Option<&UserProfile> {
        self.users
            .binary_search_by(|u| u.user_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.users[i])
    }

    pub fn show(&self, id: &str) -> Option<&TvShow> {
        self.shows
            .binary_search_by(|s| s.show_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.shows[i])
    }

    /// Adds a synthetic stub profile for every microblog author and follow
    /// endpoint that has none. Returns the number of stubs added.
    pub fn synthesize_missing_users(&mut self) -> usize {
        let known: HashSet<&str> = self.users.iter().map(|u| u.user_id.as_str()).collect();
        let mut missing = BTreeSet::new();
        for m in &self.microblogs {
            if !known.contains(m.author_id.as_str()) {
                missing.insert(m.author_id.clone());
            }
        }
        for f in &self.follows {
            for u in [&f.follower, &f.followee] {
                if !known.contains(u.as_str()) {
                    missing.insert(u.clone());
                }
            }
        }
        let added = missing.len();
        self.users.extend(missing.into_iter().map(UserProfile::stub));
        self.users.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        added
    }

    /// Microblog ids grouped by author, each list in (timestamp, id) order.
    pub fn posts_by_author(&self) -> BTreeMap<&str, Vec<&Microblog>> {
        let mut out: BTreeMap<&str, Vec<&Microblog>> = BTreeMap::new();
        for m in &self.microblogs {
            out.entry(m.author_id.as_str()).or_default().push(m);
        }
        for posts in out.values_mut() {
            posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        }
        out
    }

    /// Followers of each followee.
    pub fn followers(&self) -> HashMap<&str, BTreeSet<&str>> {
        let mut out: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for f in &self.follows {
            out.entry(f.followee.as_str())
                .or_default()
                .insert(f.follower.as_str());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MicroblogDuplicateId,
    MicroblogSelfRoot,
    MicroblogNegativeTimestamp,
    MicroblogUnknownAuthor,
    UserDuplicateId,
    UserAgeRange,
    FollowSelfLoop,
    FollowDuplicate,
    FollowUnknownEndpoint,
    ShowDuplicateId,
    ShowLabelCount,
    ShowRoundEmpty,
    ShowRoundOrder,
    ShowUnknownActorAccount,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::MicroblogDuplicateId => "microblog.duplicate_id",
            Rule::MicroblogSelfRoot => "microblog.self_root",
            Rule::MicroblogNegativeTimestamp => "microblog.negative_timestamp",
            Rule::MicroblogUnknownAuthor => "microblog.unknown_author",
            Rule::UserDuplicateId => "user.duplicate_id",
            Rule::UserAgeRange => "user.age_range",
            Rule::FollowSelfLoop => "follow.self_loop",
            Rule::FollowDuplicate => "follow.duplicate",
            Rule::FollowUnknownEndpoint => "follow.unknown_endpoint",
            Rule::ShowDuplicateId => "show.duplicate_id",
            Rule::ShowLabelCount => "show.label_count",
            Rule::ShowRoundEmpty => "show.round_empty",
            Rule::ShowRoundOrder => "show.round_order",
            Rule::ShowUnknownActorAccount => "show.unknown_actor_account",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// Record locator such as `microblog:m17` or `follow:u1->u2`.
    pub locator: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.violations.iter().filter(|v| v.rule == rule).count()
    }
}

pub const LABELS_PER_SHOW: usize = 3;
pub const AGE_RANGE: std::ops::RangeInclusive<u32> = 1..=120;

/// Checks every record invariant. Violations come back sorted, so the report
/// does not depend on record order.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |rule, locator: String| out.push(Violation { rule, locator });

    let mut user_ids = HashSet::new();
    for u in dataset.users() {
        if !user_ids.insert(u.user_id.as_str()) {
            push(Rule::UserDuplicateId, format!("user:{}", u.user_id));
        }
        if let Some(age) = u.age {
            if !AGE_RANGE.contains(&age) {
                push(Rule::UserAgeRange, format!("user:{}", u.user_id));
            }
        }
    }

    let mut mb_ids = HashSet::new();
    for m in dataset.microblogs() {
        let loc = format!("microblog:{}", m.id);
        if !mb_ids.insert(m.id.as_str()) {
            push(Rule::MicroblogDuplicateId, loc.clone());
        }
        if m.root_id.as_deref() == Some(m.id.as_str()) {
            push(Rule::MicroblogSelfRoot, loc.clone());
        }
        if m.timestamp < 0 {
            push(Rule::MicroblogNegativeTimestamp, loc.clone());
        }
        if !user_ids.contains(m.author_id.as_str()) {
            push(Rule::MicroblogUnknownAuthor, loc);
        }
    }

    let mut pairs = HashSet::new();
    for f in dataset.follows() {
        let loc = format!("follow:{}->{}", f.follower, f.followee);
        if f.follower == f.followee {
            push(Rule::FollowSelfLoop, loc.clone());
        }
        if !pairs.insert((f.follower.as_str(), f.followee.as_str())) {
            push(Rule::FollowDuplicate, loc.clone());
        }
        if !user_ids.contains(f.follower.as_str()) || !user_ids.contains(f.followee.as_str()) {
            push(Rule::FollowUnknownEndpoint, loc);
        }
    }

    let mut show_ids = HashSet::new();
    for s in dataset.shows() {
        let loc = format!("show:{}", s.show_id);
        if !show_ids.insert(s.show_id.as_str()) {
            push(Rule::ShowDuplicateId, loc.clone());
        }
        if s.labels.len() != LABELS_PER_SHOW {
            push(Rule::ShowLabelCount, loc.clone());
        }
        if s.rounds.iter().any(|r| r.start >= r.end) {
            push(Rule::ShowRoundEmpty, loc.clone());
        }
        if s.rounds.windows(2).any(|w| w[1].start < w[0].end) {
            push(Rule::ShowRoundOrder, loc.clone());
        }
        for name in s.actor_accounts.keys() {
            if !s.actors.contains(name) {
                push(Rule::ShowUnknownActorAccount, format!("{loc}:{name}"));
            }
        }
    }

    out.sort();
    ValidationReport { violations: out }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn mb(id: &str, author: &str, ts: Timestamp, root: Option<&str>, content: &str) -> Microblog {
        Microblog {
            id: id.into(),
            author_id: author.into(),
            author_name: format!("name-{author}"),
            author_ip: "10.0.0.1".into(),
            timestamp: ts,
            root_id: root.map(Into::into),
            content: content.into(),
        }
    }

    pub fn user(id: &str) -> UserProfile {
        UserProfile {
            user_id: id.into(),
            age: Some(20),
            region: Some("r1".into()),
            is_vip: false,
            synthetic: false,
        }
    }

    pub fn show(id: &str, labels: [&str; 3], topics: &[&str]) -> TvShow {
        TvShow {
            show_id: id.into(),
            title: format!("title-{id}"),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            actors: vec![],
            actor_accounts: BTreeMap::new(),
            topics: topics.iter().map(|s| s.to_string()).collect(),
            rounds: vec![],
            view_count: None,
        }
    }

    pub fn three_show_dataset() -> Dataset {
        let shows = vec![
            show("v1", ["Love", "Idol", "Modern"], &["alpha"]),
            show("v2", ["War", "Love", "Historical"], &["beta"]),
            show("v3", ["Comedy", "Love", "Family"], &["gamma"]),
        ];
        let users = vec![user("u1"), user("u2"), user("u3")];
        let microblogs = vec![
            mb("m1", "u1", 100, None, "alpha is on"),
            mb("m2", "u2", 200, Some("m1"), "agreed"),
            mb("m3", "u3", 300, None, "gamma tonight"),
        ];
        let follows = vec![FollowEdge {
            follower: "u1".into(),
            followee: "u2".into(),
        }];
        Dataset::new(microblogs, users, follows, shows)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn well_formed_fixture_has_no_violations() {
        assert!(validate_dataset(&three_show_dataset()).is_empty());
    }

    #[test]
    fn two_labels_is_one_violation() {
        let d = three_show_dataset();
        let mut shows = d.shows().to_vec();
        shows[1].labels.pop();
        let d = Dataset::new(d.microblogs().to_vec(), d.users().to_vec(), d.follows().to_vec(), shows);
        let r = validate_dataset(&d);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, Rule::ShowLabelCount);
        assert_eq!(r.violations[0].locator, "show:v2");
    }

    #[test]
    fn self_root_is_one_violation() {
        let d = three_show_dataset();
        let mut mbs = d.microblogs().to_vec();
        mbs[2].root_id = Some("m3".into());
        let d = Dataset::new(mbs, d.users().to_vec(), d.follows().to_vec(), d.shows().to_vec());
        let r = validate_dataset(&d);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, Rule::MicroblogSelfRoot);
    }

    #[test]
    fn other_rules_fire() {
        let mut bad_user = user("u9");
        bad_user.age = Some(0);
        let mut s = show("v1", ["a", "b", "c"], &["x"]);
        s.rounds = vec![Round { start: 10, end: 20 }, Round { start: 15, end: 30 }, Round { start: 40, end: 40 }];
        s.actor_accounts.insert("ghost".into(), Some("u1".into()));
        let d = Dataset::new(
            vec![mb("m1", "nobody", -1, None, ""), mb("m1", "u1", 0, None, "")],
            vec![user("u1"), bad_user, user("u1")],
            vec![
                FollowEdge { follower: "u1".into(), followee: "u1".into() },
                FollowEdge { follower: "u1".into(), followee: "zz".into() },
                FollowEdge { follower: "u1".into(), followee: "zz".into() },
            ],
            vec![s],
        );
        let r = validate_dataset(&d);
        for rule in [
            Rule::UserAgeRange,
            Rule::UserDuplicateId,
            Rule::MicroblogDuplicateId,
            Rule::MicroblogNegativeTimestamp,
            Rule::MicroblogUnknownAuthor,
            Rule::FollowSelfLoop,
            Rule::FollowDuplicate,
            Rule::ShowRoundOrder,
            Rule::ShowRoundEmpty,
            Rule::ShowUnknownActorAccount,
        ] {
            assert!(r.count(rule) >= 1, "{rule:?} not reported");
        }
        assert_eq!(r.count(Rule::FollowUnknownEndpoint), 2);
    }

    #[test]
    fn stubs_fill_unknown_users() {
        let d = three_show_dataset();
        let mut d = Dataset::new(
            d.microblogs().to_vec(),
            vec![user("u1")],
            vec![FollowEdge { follower: "u1".into(), followee: "u7".into() }],
            d.shows().to_vec(),
        );
        assert_eq!(d.synthesize_missing_users(), 3);
        assert!(d.user("u7").unwrap().synthetic);
        assert!(!d.user("u1").unwrap().synthetic);
        assert!(validate_dataset(&d).is_empty());
    }

    #[test]
    fn lookups_by_id() {
        let d = three_show_dataset();
        assert_eq!(d.microblog("m2").unwrap().root_id.as_deref(), Some("m1"));
        assert!(d.microblog("m9").is_none());
        assert_eq!(d.show("v3").unwrap().topics.len(), 1);
    }
}
