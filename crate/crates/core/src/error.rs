use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: field `{field}`: {message}")]
    Malformed {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{file}: duplicate id `{id}` on lines {first_line} and {second_line}")]
    DuplicateId {
        file: String,
        id: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("{file}:{line}: unparseable timestamp: {message}")]
    Timestamp {
        file: String,
        line: usize,
        message: String,
    },

    #[error("{file}:{line}: show `{show_id}` has {count} labels, expected 3")]
    LabelCount {
        file: String,
        line: usize,
        show_id: String,
        count: usize,
    },

    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),

    #[error("show `{0}` has no topic keywords")]
    EmptyTopics(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("self-loop on node `{0}`")]
    SelfLoop(String),

    #[error("invalid edge weight {0}")]
    InvalidWeight(f64),

    #[error("operation requires an undirected graph")]
    DirectedGraph,

    #[error("graphs have different node sets")]
    NodeUniverseMismatch,

    #[error("partition does not cover node `{0}`")]
    IncompletePartition(String),

    #[error("graph has no edges")]
    NoEdges,

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cannot fit curve: {0}")]
    Fit(String),

    #[error("k = {k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },

    #[error("user `{0}` has no attributed posts")]
    NoAttributedPosts(String),

    #[error("empty corpus for show `{0}`")]
    EmptyCorpus(String),

    #[error("show `{show_id}` has {count} rounds, need at least 2")]
    TooFewRounds { show_id: String, count: usize },

    #[error("show `{0}` is not in the graph")]
    UnknownShow(String),

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown export selector `{0}`")]
    UnknownSelector(String),

    #[error("report has no `{0}` section")]
    MissingSection(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
