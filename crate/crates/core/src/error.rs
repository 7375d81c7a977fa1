use std::path::PathBuf;

use crate::oracle::ElementId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("element {element} is outside the ground set of size {n}")]
    Domain { element: ElementId, n: usize },

    #[error("{what} has size {size}, exact routine is limited to {limit}")]
    Size {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("matroid {matroid} is violated by element {element} but no single removal repairs it")]
    Infeasible { matroid: usize, element: ElementId },

    #[error("initial solution is not feasible in the constraint")]
    InfeasibleInit,

    #[error("element {0} arrives more than once in one pass")]
    DuplicateArrival(ElementId),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
