use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("nesting depth exceeds max_depth {max_depth}")]
    DepthExceeded { max_depth: u32 },
    #[error("splice error: {0}")]
    SpliceError(String),
    #[error("no component at path {0:?}")]
    PathNotFound(Vec<String>),
    #[error("component at path {0:?} is atomic")]
    PathHitsAtomic(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("node {0} has no tier")]
    MissingTier(String),
    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: String, node: String },
    #[error("threshold must be a non-negative number")]
    InvalidThreshold,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state references unknown node {0}")]
    InconsistentState(String),
    #[error("history log was produced from a different model (expected {expected}, found {found})")]
    HashMismatch { expected: String, found: String },
    #[error("record at tick {tick} on edge {edge} drives stock of {node} below zero")]
    NegativeStock { tick: u64, edge: String, node: String },
    #[error("history log holds no records (null history)")]
    NullHistory,
    #[error("record references unknown edge {0}")]
    UnknownEdge(String),
    #[error("record on edge {edge} carries {found}, edge carries {expected}")]
    SubstanceMismatch {
        edge: String,
        expected: String,
        found: String,
    },
    #[error("record tick {tick} precedes last tick {last}")]
    OutOfOrder { tick: u64, last: u64 },
}

#[derive(Debug, Error)]
pub enum LogFormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("history log is empty (missing header line)")]
    MissingHeader,
    #[error(transparent)]
    Sim(#[from] SimError),
}
