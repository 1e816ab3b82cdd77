//! Joint actor + topic retrieval with repost/comment expansion.
//!
//! Seeds for a show are the posts of its cast's linked accounts plus every
//! post whose content contains one of its topic keywords. The corpus is the
//! closure of the seeds under "reposts/comments of a member are members".

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::model::{Dataset, MicroblogId, ShowId, TvShow};

/// NFC normalization followed by lowercase folding.
pub fn normalize_text(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Provenance {
    ActorMatch,
    TopicMatch(String),
    /// Reached by expansion; carries the nearest seed up the repost chain.
    Expansion(MicroblogId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShowCorpus {
    pub show_id: ShowId,
    pub members: BTreeSet<MicroblogId>,
    pub provenance: BTreeMap<MicroblogId, BTreeSet<Provenance>>,
}

impl ShowCorpus {
    pub fn empty(show_id: impl Into<ShowId>) -> Self {
        ShowCorpus {
            show_id: show_id.into(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Distinct authors of the corpus' microblogs.
    pub fn authors<'d>(&self, dataset: &'d Dataset) -> BTreeSet<&'d str> {
        self.members
            .iter()
            .filter_map(|id| dataset.microblog(id))
            .map(|m| m.author_id.as_str())
            .collect()
    }
}

/// Normalized contents and the root-to-children index, built once per
/// dataset and shared by per-show retrieval.
pub struct Retriever<'d> {
    dataset: &'d Dataset,
    normalized: Vec<String>,
    children: HashMap<&'d str, Vec<&'d str>>,
}

impl<'d> Retriever<'d> {
    pub fn new(dataset: &'d Dataset) -> Self {
        let normalized = dataset
            .microblogs()
            .par_iter()
            .map(|m| normalize_text(&m.content))
            .collect();
        let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
        for m in dataset.microblogs() {
            if let Some(root) = &m.root_id {
                children.entry(root.as_str()).or_default().push(m.id.as_str());
            }
        }
        Retriever {
            dataset,
            normalized,
            children,
        }
    }

    pub fn actor_microblogs(&self, show: &TvShow) -> BTreeSet<MicroblogId> {
        let accounts: BTreeSet<&str> = show.linked_accounts().map(|(_, acct)| acct).collect();
        if accounts.is_empty() {
            return BTreeSet::new();
        }
        self.dataset
            .microblogs()
            .iter()
            .filter(|m| accounts.contains(m.author_id.as_str()))
            .map(|m| m.id.clone())
            .collect()
    }

    pub fn topic_microblogs(&self, show: &TvShow) -> Result<BTreeMap<MicroblogId, BTreeSet<String>>> {
        if show.topics.is_empty() {
            return Err(Error::EmptyTopics(show.show_id.clone()));
        }
        let keywords: Vec<(&str, String)> = show
            .topics
            .iter()
            .map(|k| (k.as_str(), normalize_text(k)))
            .filter(|(_, n)| !n.is_empty())
            .collect();
        let mut out = BTreeMap::new();
        for (m, text) in self.dataset.microblogs().iter().zip(&self.normalized) {
            let hits: BTreeSet<String> = keywords
                .iter()
                .filter(|(_, n)| text.contains(n.as_str()))
                .map(|(k, _)| k.to_string())
                .collect();
            if !hits.is_empty() {
                out.insert(m.id.clone(), hits);
            }
        }
        Ok(out)
    }

    /// Least superset of `seeds` closed under repost/comment links.
    pub fn expand(&self, seeds: &BTreeSet<MicroblogId>) -> BTreeSet<MicroblogId> {
        let mut members: BTreeSet<MicroblogId> = seeds.clone();
        let mut queue: VecDeque<&str> = seeds.iter().map(String::as_str).collect();
        while let Some(id) = queue.pop_front() {
            for &child in self.children.get(id).into_iter().flatten() {
                if !members.contains(child) {
                    members.insert(child.to_string());
                    queue.push_back(child);
                }
            }
        }
        members
    }

    pub fn show_corpus(&self, show: &TvShow) -> Result<ShowCorpus> {
        let actor = self.actor_microblogs(show);
        let topic = if show.topics.is_empty() {
            BTreeMap::new()
        } else {
            self.topic_microblogs(show)?
        };

        let mut provenance: BTreeMap<MicroblogId, BTreeSet<Provenance>> = BTreeMap::new();
        for id in &actor {
            provenance.entry(id.clone()).or_default().insert(Provenance::ActorMatch);
        }
        for (id, kws) in topic {
            let tags = provenance.entry(id).or_default();
            tags.extend(kws.into_iter().map(Provenance::TopicMatch));
        }
        let seeds: BTreeSet<MicroblogId> = provenance.keys().cloned().collect();
        let members = self.expand(&seeds);

        for id in members.difference(&seeds) {
            let seed = self.nearest_seed(id, &seeds);
            provenance
                .entry(id.clone())
                .or_default()
                .insert(Provenance::Expansion(seed));
        }

        Ok(ShowCorpus {
            show_id: show.show_id.clone(),
            members,
            provenance,
        })
    }

    fn nearest_seed(&self, id: &str, seeds: &BTreeSet<MicroblogId>) -> MicroblogId {
        let mut cur = id;
        let mut steps = 0;
        loop {
            let root = self
                .dataset
                .microblog(cur)
                .and_then(|m| m.root_id.as_deref())
                .expect("expanded member has a root");
            if seeds.contains(root) {
                return root.to_string();
            }
            cur = root;
            steps += 1;
            assert!(steps <= self.dataset.microblogs().len(), "repost cycle without a seed");
        }
    }
}

pub fn retrieve_actor_microblogs(show: &TvShow, dataset: &Dataset) -> BTreeSet<MicroblogId> {
    Retriever::new(dataset).actor_microblogs(show)
}

pub fn retrieve_topic_microblogs(
    show: &TvShow,
    dataset: &Dataset,
) -> Result<BTreeMap<MicroblogId, BTreeSet<String>>> {
    Retriever::new(dataset).topic_microblogs(show)
}

/// Dangling root ids are ignored.
pub fn expand_seed_set(seeds: &BTreeSet<MicroblogId>, dataset: &Dataset) -> BTreeSet<MicroblogId> {
    Retriever::new(dataset).expand(seeds)
}

pub fn retrieve_show_corpus(show: &TvShow, dataset: &Dataset) -> Result<ShowCorpus> {
    Retriever::new(dataset).show_corpus(show)
}

/// Corpora for every show of the dataset, in show id order.
pub fn retrieve_all(dataset: &Dataset) -> Result<Vec<ShowCorpus>> {
    let r = Retriever::new(dataset);
    dataset.shows().par_iter().map(|s| r.show_corpus(s)).collect()
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub show_id: ShowId,
    pub microblog_id: MicroblogId,
    pub provenance: Vec<Provenance>,
}

pub fn write_corpora(corpora: &[ShowCorpus], path: &Path) -> Result<()> {
    let lines: Vec<CorpusLine> = corpora
        .iter()
        .flat_map(|c| {
            c.members.iter().map(move |id| CorpusLine {
                show_id: c.show_id.clone(),
                microblog_id: id.clone(),
                provenance: c.provenance.get(id).into_iter().flatten().cloned().collect(),
            })
        })
        .collect();
    crate::ingest::write_jsonl(path, &lines)
}

/// Reads corpora from a corpus file, or from every `*.jsonl` file of a
/// directory (sorted by name). Shows of `dataset` absent from the files get
/// empty corpora; the result is in show id order.
pub fn read_corpora(path: &Path, dataset: &Dataset) -> Result<Vec<ShowCorpus>> {
    let files = if path.is_dir() {
        let mut v: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut by_show: BTreeMap<ShowId, ShowCorpus> = dataset
        .shows()
        .iter()
        .map(|s| (s.show_id.clone(), ShowCorpus::empty(s.show_id.clone())))
        .collect();
    for f in files {
        for line in crate::ingest::read_jsonl::<CorpusLine>(&f)? {
            let c = by_show
                .entry(line.show_id.clone())
                .or_insert_with(|| ShowCorpus::empty(line.show_id.clone()));
            c.members.insert(line.microblog_id.clone());
            c.provenance
                .entry(line.microblog_id)
                .or_default()
                .extend(line.provenance);
        }
    }
    Ok(by_show.into_values().collect())
}
