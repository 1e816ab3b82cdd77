//! Pipeline orchestration, the report document and CSV export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graphkit::CdfPoint;
use crate::ingest::{parse_dataset_with, DatasetPaths, ParseOptions};
use crate::model::{Dataset, ShowId};
use crate::profile::content::{content_profile, ContentAspect, SentimentLexicons};
use crate::profile::propagation::{propagation_profile, PropagationAspect, PropagationOptions, WindowSpec, DEFAULT_WINDOW};
use crate::profile::social::{social_profile, SocialAspect};
use crate::profile::user::{user_profile, UserAspect};
use crate::retrieval::{retrieve_all, write_corpora, ShowCorpus};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const CORPORA_FILE: &str = "corpora.jsonl";
pub const PLOTS_DIR: &str = "plots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    User,
    Content,
    Social,
    Propagation,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [Aspect::User, Aspect::Content, Aspect::Social, Aspect::Propagation];

    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::User => "user",
            Aspect::Content => "content",
            Aspect::Social => "social",
            Aspect::Propagation => "propagation",
        }
    }

    /// Parses a comma-separated list such as `user,content`.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Aspect>> {
        let set: BTreeSet<Aspect> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if set.is_empty() {
            return Err(Error::Config("no aspects selected".into()));
        }
        Ok(set)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aspect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Aspect::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown aspect `{s}`")))
    }
}

/// Settings for one pipeline run. Read from a `key = value` file, then
/// overridden from the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub threshold: usize,
    pub window: i64,
    pub strict: bool,
    pub windows_from: Option<i64>,
    pub windows_count: usize,
    pub focus: Option<ShowId>,
    pub aspects: BTreeSet<Aspect>,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    pub lexicon: Option<PathBuf>,
    pub lenient: bool,
    pub export: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: PathBuf::from("."),
            out: PathBuf::from("out"),
            seed: 0,
            k: 3,
            threshold: 1,
            window: DEFAULT_WINDOW,
            strict: false,
            windows_from: None,
            windows_count: 0,
            focus: None,
            aspects: Aspect::ALL.into_iter().collect(),
            workers: 0,
            lexicon: None,
            lenient: false,
            export: true,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
    }
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 15] = [
        "dataset",
        "out",
        "seed",
        "k",
        "threshold",
        "window",
        "strict",
        "windows_from",
        "windows_count",
        "focus",
        "aspects",
        "workers",
        "lexicon",
        "lenient",
        "export",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "threshold" => self.threshold = parse_value(key, value)?,
            "window" => self.window = parse_value(key, value)?,
            "strict" => self.strict = parse_bool(key, value)?,
            "windows_from" => self.windows_from = Some(parse_value(key, value)?),
            "windows_count" => self.windows_count = parse_value(key, value)?,
            "focus" => self.focus = Some(value.to_string()),
            "aspects" => self.aspects = Aspect::parse_list(value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "lexicon" => self.lexicon = Some(PathBuf::from(value)),
            "lenient" => self.lenient = parse_bool(key, value)?,
            "export" => self.export = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Relative paths are
    /// taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        for p in [Some(&mut cfg.dataset), Some(&mut cfg.out), cfg.lexicon.as_mut()]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Seed for one stage, derived from the run seed and the stage name.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over the dataset files, in a fixed order and framed by name and
/// length.
pub fn dataset_fingerprint(paths: &DatasetPaths) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths.all() {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex(&h.finalize()))
}

pub fn lexicon_hash(lex: &SentimentLexicons) -> Result<String> {
    Ok(hex(&Sha256::digest(serde_json::to_vec(lex)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub seed: u64,
    pub k: usize,
    pub threshold: usize,
    pub window: i64,
    pub strict_attribution: bool,
    pub windows_from: Option<i64>,
    pub windows_count: usize,
    pub focus: Option<ShowId>,
    pub lexicon_hash: String,
    pub aspects: Vec<Aspect>,
    pub stage_seeds: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub microblogs: usize,
    pub users: usize,
    pub follows: usize,
    pub shows: usize,
    pub stub_users: usize,
    pub skipped_lines: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sections {
    pub user: Option<UserAspect>,
    pub content: Option<ContentAspect>,
    pub social: Option<SocialAspect>,
    pub propagation: Option<PropagationAspect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub schema_version: u32,
    pub fingerprint: String,
    pub parameters: Parameters,
    pub dataset: DatasetCounts,
    pub corpus_sizes: BTreeMap<ShowId, usize>,
    /// What each table's fractions are taken over.
    pub denominators: BTreeMap<String, String>,
    pub sections: Sections,
}

impl ProfileReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn denominators(aspects: &BTreeSet<Aspect>) -> BTreeMap<String, String> {
    let mut d = BTreeMap::new();
    let mut put = |k: &str, v: &str| {
        d.insert(k.to_string(), v.to_string());
    };
    if aspects.contains(&Aspect::User) {
        put("user.ages", "non-VIP corpus authors; mean over those with a known age");
        put("user.participation", "non-VIP corpus authors with a known region; PI relative to the tenth region");
        put("user.clustering", "non-VIP corpus authors with at least one attributed post");
        put("user.cohesion.vip_follow", "inside: cluster members; outside: clustered users not in the cluster");
    }
    if aspects.contains(&Aspect::Content) {
        put("content.sentiment", "corpus posts of each show, split by initial post or repost");
        put("content.positive_fraction", "positive over positive plus negative posts of the show");
        put("content.network.degree", "shows in the show network");
    }
    if aspects.contains(&Aspect::Social) {
        put("social.viewers", "distinct corpus authors");
        put("social.influence", "corpus posts of the show");
        put("social.actors.fan_count", "direct followers of the actor account");
    }
    if aspects.contains(&Aspect::Propagation) {
        put("propagation.round_overlap", "distinct corpus authors posting inside the first two rounds");
        put("propagation.edges", "distinct users with at least one transition");
        put("propagation.events.top_share", "total outflow of the focus show in the window");
    }
    d
}

struct Outputs {
    created_dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn cleanup(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        let _ = fs::remove_dir(self.created_dir.as_deref().map(|d| d.join(PLOTS_DIR)).unwrap_or_default());
        if let Some(d) = &self.created_dir {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Computes the report in memory without touching the output directory.
pub fn build_report(cfg: &PipelineConfig) -> Result<(ProfileReport, Vec<ShowCorpus>)> {
    let paths = DatasetPaths::in_dir(&cfg.dataset);
    let fingerprint = dataset_fingerprint(&paths).map_err(|e| e.in_stage("ingest"))?;
    let parsed = parse_dataset_with(&paths, ParseOptions { lenient: cfg.lenient }).map_err(|e| e.in_stage("ingest"))?;
    let dataset = &parsed.dataset;
    log::info!("ingested {} microblogs, {} shows", dataset.microblogs().len(), dataset.shows().len());

    let lex = match &cfg.lexicon {
        Some(p) => SentimentLexicons::from_json_file(p).map_err(|e| e.in_stage("config"))?,
        None => SentimentLexicons::builtin(),
    };
    let corpora = retrieve_all(dataset).map_err(|e| e.in_stage("retrieval"))?;
    log::info!("retrieved {} corpora", corpora.len());

    let seeds: BTreeMap<String, u64> = cfg
        .aspects
        .iter()
        .map(|a| (a.to_string(), stage_seed(cfg.seed, a.as_str())))
        .collect();
    let sections = profile_sections(cfg, dataset, &corpora, &lex, &seeds)?;

    let report = ProfileReport {
        schema_version: SCHEMA_VERSION,
        fingerprint,
        parameters: Parameters {
            seed: cfg.seed,
            k: cfg.k,
            threshold: cfg.threshold,
            window: cfg.window,
            strict_attribution: cfg.strict,
            windows_from: cfg.windows_from,
            windows_count: cfg.windows_count,
            focus: cfg.focus.clone(),
            lexicon_hash: lexicon_hash(&lex)?,
            aspects: cfg.aspects.iter().copied().collect(),
            stage_seeds: seeds,
        },
        dataset: DatasetCounts {
            microblogs: dataset.microblogs().len(),
            users: dataset.users().len(),
            follows: dataset.follows().len(),
            shows: dataset.shows().len(),
            stub_users: parsed.stub_users,
            skipped_lines: parsed.skipped_lines,
        },
        corpus_sizes: corpora.iter().map(|c| (c.show_id.clone(), c.len())).collect(),
        denominators: denominators(&cfg.aspects),
        sections,
    };
    Ok((report, corpora))
}

fn profile_sections(
    cfg: &PipelineConfig,
    dataset: &Dataset,
    corpora: &[ShowCorpus],
    lex: &SentimentLexicons,
    seeds: &BTreeMap<String, u64>,
) -> Result<Sections> {
    let shows = dataset.shows();
    let want = |a: Aspect| cfg.aspects.contains(&a);
    let seed = |a: Aspect| seeds[a.as_str()];
    let mut s = Sections::default();
    if want(Aspect::User) {
        s.user = Some(user_profile(corpora, dataset, cfg.k, seed(Aspect::User)));
    }
    if want(Aspect::Content) {
        s.content = Some(content_profile(shows, corpora, dataset, lex, cfg.threshold, seed(Aspect::Content)));
    }
    if want(Aspect::Social) {
        s.social = Some(social_profile(shows, corpora, dataset).map_err(|e| e.in_stage("social"))?);
    }
    if want(Aspect::Propagation) {
        let opts = PropagationOptions {
            window: cfg.window,
            strict: cfg.strict,
        };
        let windows = cfg.windows_from.map(|from| WindowSpec {
            from,
            count: cfg.windows_count,
            focus: cfg.focus.clone(),
        });
        s.propagation =
            Some(propagation_profile(shows, corpora, dataset, opts, windows.as_ref()).map_err(|e| e.in_stage("propagation"))?);
    }
    Ok(s)
}

fn write_file(out: &mut Outputs, path: PathBuf, body: &[u8]) -> Result<()> {
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    out.files.push(path);
    Ok(())
}

/// Runs ingest, retrieval, the selected profilers and the export on a pool
/// of `cfg.workers` threads, writing `report.json`, `corpora.jsonl` and the
/// plot CSVs under `cfg.out`. Files written by a failed run are removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ProfileReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let created_dir = (!cfg.out.exists()).then(|| cfg.out.clone());
    let mut outputs = Outputs {
        created_dir,
        files: Vec::new(),
    };
    let result = pool.install(|| -> Result<ProfileReport> {
        let (report, corpora) = build_report(cfg)?;
        fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e).in_stage("report"))?;
        let corpora_path = cfg.out.join(CORPORA_FILE);
        write_corpora(&corpora, &corpora_path).map_err(|e| e.in_stage("report"))?;
        outputs.files.push(corpora_path);
        write_file(&mut outputs, cfg.out.join(REPORT_FILE), report.to_json()?.as_bytes()).map_err(|e| e.in_stage("report"))?;
        if cfg.export {
            let plots = cfg.out.join(PLOTS_DIR);
            outputs.files.extend(SELECTORS.iter().map(|s| plots.join(format!("{s}.csv"))));
            export_all(&report, &plots).map_err(|e| e.in_stage("export"))?;
        }
        Ok(report)
    });
    if result.is_err() {
        outputs.cleanup();
    }
    result
}

pub const SELECTORS: [&str; 12] = [
    "age_histogram",
    "pi",
    "sentiment",
    "positive_fraction",
    "degree_cdf",
    "clustering_cdf",
    "actor_influence_cdf",
    "fan_influence_cdf",
    "actor_summary",
    "round_overlap",
    "propagation",
    "propagation_events",
];

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| Error::MissingSection(name.to_string()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Shortest round-trip decimal, always with a fractional part.
fn num(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 {
        format!("{x:.1}")
    } else {
        x.to_string()
    }
}

fn cdf_rows(points: &[CdfPoint], integral: bool) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            let v = if integral { format!("{}", p.value as i64) } else { num(p.value) };
            vec![v, num(p.fraction)]
        })
        .collect()
}

/// Header and rows for one figure-analog table.
pub fn plot_table(report: &ProfileReport, selector: &str) -> Result<(Vec<&'static str>, Vec<Vec<String>>)> {
    let s = &report.sections;
    Ok(match selector {
        "age_histogram" => {
            let u = section(&s.user, "user")?;
            let rows = u.ages.bins.iter().map(|(a, n)| vec![a.to_string(), n.to_string()]).collect();
            (vec!["age", "users"], rows)
        }
        "pi" => {
            let u = section(&s.user, "user")?;
            let p = u.participation.as_ref().ok_or_else(|| Error::MissingSection("user.participation".into()))?;
            let rows = p
                .rows
                .iter()
                .map(|r| vec![r.region.clone(), r.un.to_string(), num(r.pi)])
                .collect();
            (vec!["region", "UN", "PI"], rows)
        }
        "sentiment" => {
            let c = section(&s.content, "content")?;
            let mut rows = Vec::new();
            for (show, t) in &c.sentiment {
                for (kind, counts) in [("initial", &t.initial), ("repost", &t.repost)] {
                    rows.push(vec![
                        show.clone(),
                        kind.to_string(),
                        counts.positive.to_string(),
                        counts.negative.to_string(),
                        counts.non_sentiment.to_string(),
                    ]);
                }
            }
            (vec!["show_id", "kind", "positive", "negative", "non_sentiment"], rows)
        }
        "positive_fraction" => {
            let c = section(&s.content, "content")?;
            let rows = c
                .positive_fraction
                .iter()
                .map(|r| {
                    vec![
                        opt(r.rank),
                        r.show_id.clone(),
                        opt(r.view_count),
                        r.positive.to_string(),
                        r.negative.to_string(),
                        r.fraction.map(num).unwrap_or_default(),
                    ]
                })
                .collect();
            (vec!["rank", "show_id", "view_count", "positive", "negative", "fraction"], rows)
        }
        "degree_cdf" | "clustering_cdf" => {
            let c = section(&s.content, "content")?;
            let n = c.network.as_ref().ok_or_else(|| Error::MissingSection("content.network".into()))?;
            if selector == "degree_cdf" {
                (vec!["degree", "fraction"], cdf_rows(&n.degree.cdf, true))
            } else {
                (vec!["clustering", "fraction"], cdf_rows(&n.clustering_cdf, false))
            }
        }
        "actor_influence_cdf" => {
            let so = section(&s.social, "social")?;
            (vec!["actor_fraction", "fraction"], cdf_rows(&so.actor_fraction_cdf, false))
        }
        "fan_influence_cdf" => {
            let so = section(&s.social, "social")?;
            (vec!["fan_fraction", "fraction"], cdf_rows(&so.fan_fraction_cdf, false))
        }
        "actor_summary" => {
            let so = section(&s.social, "social")?;
            let rows = so
                .actors
                .iter()
                .map(|a| {
                    vec![
                        a.actor.clone(),
                        a.fan_count.to_string(),
                        a.shows.to_string(),
                        num(a.mean_influence),
                        num(a.variance_influence),
                    ]
                })
                .collect();
            (vec!["actor", "fan_count", "shows", "mean_influence", "variance_influence"], rows)
        }
        "round_overlap" => {
            let p = section(&s.propagation, "propagation")?;
            let rows = p
                .round_overlap
                .iter()
                .map(|r| {
                    vec![
                        r.show_id.clone(),
                        r.only_first.to_string(),
                        r.only_second.to_string(),
                        r.both.to_string(),
                    ]
                })
                .collect();
            (vec!["show_id", "only_first", "only_second", "both"], rows)
        }
        "propagation" => {
            let p = section(&s.propagation, "propagation")?;
            let rows = p
                .edges
                .iter()
                .map(|e| vec![e.src.clone(), e.dst.clone(), format!("{}", e.weight as u64)])
                .collect();
            (vec!["src", "dst", "weight"], rows)
        }
        "propagation_events" => {
            let p = section(&s.propagation, "propagation")?;
            let ev = p.events.as_ref().ok_or_else(|| Error::MissingSection("propagation.events".into()))?;
            let mut rows = Vec::new();
            for (i, w) in ev.iter().enumerate() {
                for o in &w.ranking {
                    rows.push(vec![
                        i.to_string(),
                        w.start.to_string(),
                        o.show_id.clone(),
                        o.users.to_string(),
                        num(o.users as f64 / w.total as f64),
                    ]);
                }
            }
            (vec!["window", "start", "dst", "users", "share"], rows)
        }
        other => return Err(Error::UnknownSelector(other.to_string())),
    })
}

/// Writes `<dir>/<selector>.csv`.
pub fn export_plot_data(report: &ProfileReport, selector: &str, dir: &Path) -> Result<PathBuf> {
    let (header, rows) = plot_table(report, selector)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{selector}.csv"));
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in &rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Exports every selector whose section is present in the report.
pub fn export_all(report: &ProfileReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for sel in SELECTORS {
        match plot_table(report, sel) {
            Err(Error::MissingSection(_)) => continue,
            Err(e) => return Err(e),
            Ok(_) => out.push(export_plot_data(report, sel, dir)?),
        }
    }
    Ok(out)
}
