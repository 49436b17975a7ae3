use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resource limit exceeded: {what} would need {requested}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("unknown node id {id} (mesh has {len} nodes)")]
    Lookup { id: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("graph is not connected: {0}")]
    Connectivity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no node satisfies selector {selector} (d_rel threshold {d_threshold}, s_rel threshold {s_threshold})")]
    Selection {
        selector: String,
        d_threshold: f64,
        s_threshold: f64,
    },

    #[error("out of range: {0}")]
    Range(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed document: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit status: 1 for usage errors, 3 for numerical failures,
    /// 2 for bad input data and everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Parse {
            path: path.into(),
            line: source.line(),
            column: source.column(),
            source,
        }
    }
}
