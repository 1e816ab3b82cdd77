//! JSON-lines trace files and the synthetic trace generator.
//!
//! A dataset directory holds four files, one JSON object per line, with field
//! names matching the record types in [`crate::model`]:
//! `microblogs.jsonl`, `users.jsonl`, `follows.jsonl`, `shows.jsonl`.

mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{
    Dataset, FollowEdge, Microblog, Round, TvShow, UserProfile, AGE_RANGE, LABELS_PER_SHOW,
};

pub use synthetic::{
    generate_synthetic, write_ground_truth, GroundTruth, PlantedEdge, PlantedTransition,
    SentimentMix, SyntheticSpec, PLANT_SEPARATION, QUIET_GAP, TRACE_START,
};

pub const MICROBLOGS_FILE: &str = "microblogs.jsonl";
pub const USERS_FILE: &str = "users.jsonl";
pub const FOLLOWS_FILE: &str = "follows.jsonl";
pub const SHOWS_FILE: &str = "shows.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub microblogs: PathBuf,
    pub users: PathBuf,
    pub follows: PathBuf,
    pub shows: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            microblogs: dir.join(MICROBLOGS_FILE),
            users: dir.join(USERS_FILE),
            follows: dir.join(FOLLOWS_FILE),
            shows: dir.join(SHOWS_FILE),
        }
    }

    pub fn all(&self) -> [&Path; 4] {
        [&self.microblogs, &self.users, &self.follows, &self.shows]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Skip and count bad lines instead of failing on the first one.
    pub lenient: bool,
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub dataset: Dataset,
    pub skipped_lines: usize,
    pub stub_users: usize,
}

/// Strict parse of the four trace files.
pub fn parse_dataset(paths: &DatasetPaths) -> Result<Dataset> {
    parse_dataset_with(paths, ParseOptions::default()).map(|o| o.dataset)
}

pub fn parse_dataset_with(paths: &DatasetPaths, opts: ParseOptions) -> Result<ParseOutcome> {
    // one worker per file; assembly sorts by id so the merge is deterministic
    let (mbs, users, follows, shows) = std::thread::scope(|s| {
        let mbs = s.spawn(|| parse_file::<Microblog>(&paths.microblogs, opts));
        let users = s.spawn(|| parse_file::<UserProfile>(&paths.users, opts));
        let follows = s.spawn(|| parse_file::<FollowEdge>(&paths.follows, opts));
        let shows = parse_file::<TvShow>(&paths.shows, opts);
        (
            mbs.join().expect("microblog parser panicked"),
            users.join().expect("user parser panicked"),
            follows.join().expect("follow parser panicked"),
            shows,
        )
    });
    // report the first fatal error in file order
    let (mbs, s1) = mbs?;
    let (users, s2) = users?;
    let (follows, s3) = follows?;
    let (shows, s4) = shows?;

    let mut dataset = Dataset::new(mbs, users, follows, shows);
    let stub_users = dataset.synthesize_missing_users();
    Ok(ParseOutcome {
        dataset,
        skipped_lines: s1 + s2 + s3 + s4,
        stub_users,
    })
}

/// Writes the dataset as four JSON-lines files into `dir`.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<DatasetPaths> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = DatasetPaths::in_dir(dir);
    write_jsonl(&paths.microblogs, dataset.microblogs())?;
    write_jsonl(&paths.users, dataset.users())?;
    write_jsonl(&paths.follows, dataset.follows())?;
    write_jsonl(&paths.shows, dataset.shows())?;
    Ok(paths)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

trait Record: Sized {
    /// Uniqueness key within one file.
    fn key(&self) -> String;
    fn from_object(obj: &Map<String, Value>, at: &Loc) -> Result<Self>;
}

struct Loc<'a> {
    file: &'a str,
    line: usize,
}

impl Loc<'_> {
    fn malformed(&self, field: &str, message: impl Into<String>) -> Error {
        Error::Malformed {
            file: self.file.to_string(),
            line: self.line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn required<T: DeserializeOwned>(&self, obj: &Map<String, Value>, field: &str) -> Result<T> {
        match obj.get(field) {
            None => Err(self.malformed(field, "missing")),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| self.malformed(field, e.to_string())),
        }
    }

    fn optional<T: DeserializeOwned>(&self, obj: &Map<String, Value>, field: &str) -> Result<Option<T>> {
        match obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| self.malformed(field, e.to_string())),
        }
    }

    fn timestamp(&self, obj: &Map<String, Value>) -> Result<i64> {
        let bad = |message: String| Error::Timestamp {
            file: self.file.to_string(),
            line: self.line,
            message,
        };
        let ts = match obj.get("timestamp") {
            None => return Err(self.malformed("timestamp", "missing")),
            Some(Value::Number(n)) => n.as_i64().ok_or_else(|| bad(format!("{n} is not an integer")))?,
            Some(Value::String(s)) => s.trim().parse::<i64>().map_err(|e| bad(format!("{s:?}: {e}")))?,
            Some(other) => return Err(bad(format!("unexpected value {other}"))),
        };
        if ts < 0 {
            return Err(bad(format!("{ts} is before the epoch")));
        }
        Ok(ts)
    }
}

impl Record for Microblog {
    fn key(&self) -> String {
        self.id.clone()
    }

    fn from_object(obj: &Map<String, Value>, at: &Loc) -> Result<Self> {
        let m = Microblog {
            id: at.required(obj, "id")?,
            author_id: at.required(obj, "author_id")?,
            author_name: at.required(obj, "author_name")?,
            author_ip: at.required(obj, "author_ip")?,
            timestamp: at.timestamp(obj)?,
            root_id: at.optional(obj, "root_id")?,
            content: at.required(obj, "content")?,
        };
        if m.root_id.as_ref() == Some(&m.id) {
            return Err(at.malformed("root_id", "equals the microblog's own id"));
        }
        Ok(m)
    }
}

impl Record for UserProfile {
    fn key(&self) -> String {
        self.user_id.clone()
    }

    fn from_object(obj: &Map<String, Value>, at: &Loc) -> Result<Self> {
        let u = UserProfile {
            user_id: at.required(obj, "user_id")?,
            age: at.optional(obj, "age")?,
            region: at.optional(obj, "region")?,
            is_vip: at.optional(obj, "is_vip")?.unwrap_or(false),
            synthetic: at.optional(obj, "synthetic")?.unwrap_or(false),
        };
        if let Some(age) = u.age {
            if !AGE_RANGE.contains(&age) {
                return Err(at.malformed("age", format!("{age} outside [1, 120]")));
            }
        }
        Ok(u)
    }
}

impl Record for FollowEdge {
    fn key(&self) -> String {
        format!("{}->{}", self.follower, self.followee)
    }

    fn from_object(obj: &Map<String, Value>, at: &Loc) -> Result<Self> {
        let f = FollowEdge {
            follower: at.required(obj, "follower")?,
            followee: at.required(obj, "followee")?,
        };
        if f.follower == f.followee {
            return Err(at.malformed("followee", "user follows itself"));
        }
        Ok(f)
    }
}

impl Record for TvShow {
    fn key(&self) -> String {
        self.show_id.clone()
    }

    fn from_object(obj: &Map<String, Value>, at: &Loc) -> Result<Self> {
        let show = TvShow {
            show_id: at.required(obj, "show_id")?,
            title: at.required(obj, "title")?,
            labels: at.required(obj, "labels")?,
            actors: at.required(obj, "actors")?,
            actor_accounts: at.optional(obj, "actor_accounts")?.unwrap_or_default(),
            topics: at.required(obj, "topics")?,
            rounds: at.optional::<Vec<Round>>(obj, "rounds")?.unwrap_or_default(),
            view_count: at.optional(obj, "view_count")?,
        };
        if show.labels.len() != LABELS_PER_SHOW {
            return Err(Error::LabelCount {
                file: at.file.to_string(),
                line: at.line,
                show_id: show.show_id,
                count: show.labels.len(),
            });
        }
        if show.rounds.iter().any(|r| r.start >= r.end) {
            return Err(at.malformed("rounds", "empty interval"));
        }
        if show.rounds.windows(2).any(|w| w[1].start < w[0].end) {
            return Err(at.malformed("rounds", "intervals overlap or are unsorted"));
        }
        if let Some(name) = show.actor_accounts.keys().find(|n| !show.actors.contains(n)) {
            return Err(at.malformed("actor_accounts", format!("`{name}` is not in actors")));
        }
        Ok(show)
    }
}

fn parse_file<T: Record>(path: &Path, opts: ParseOptions) -> Result<(Vec<T>, usize)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    let mut skipped = 0;

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = Loc { file: &name, line: line_no };
        let parsed = match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => T::from_object(&obj, &at),
            Ok(_) => Err(at.malformed("<record>", "not a JSON object")),
            Err(e) => Err(at.malformed("<record>", e.to_string())),
        };
        let record = parsed.and_then(|r| match seen.get(&r.key()) {
            Some(&first) => Err(Error::DuplicateId {
                file: name.clone(),
                id: r.key(),
                first_line: first,
                second_line: line_no,
            }),
            None => Ok(r),
        });
        match record {
            Ok(r) => {
                seen.insert(r.key(), line_no);
                out.push(r);
            }
            Err(e) if opts.lenient => {
                log::warn!("skipping line: {e}");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}

/// Reads a single JSON-lines file of any deserializable record type.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Malformed {
            file: name.clone(),
            line: idx + 1,
            field: "<record>".into(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Record counts, used in summaries.
pub fn dataset_summary(dataset: &Dataset) -> BTreeMap<&'static str, usize> {
    BTreeMap::from([
        ("microblogs", dataset.microblogs().len()),
        ("users", dataset.users().len()),
        ("synthetic_users", dataset.users().iter().filter(|u| u.synthetic).count()),
        ("follows", dataset.follows().len()),
        ("shows", dataset.shows().len()),
    ])
}
