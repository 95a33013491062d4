use std::path::PathBuf;

use thiserror::Error;

use crate::distributions::Family;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{family:?} expects {expected} parameters, got {got}")]
    Arity {
        family: Family,
        expected: usize,
        got: usize,
    },
    #[error("invalid {family:?} parameters {params:?}: {reason}")]
    InvalidParams {
        family: Family,
        params: Vec<f64>,
        reason: &'static str,
    },
    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("cannot parse expression `{expr}`: {reason}")]
    Expression { expr: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial state has a non-finite log prior ({0})")]
    NonFiniteInit(f64),
    #[error("exact likelihood needs {needed} completions for one row, cap is {cap}")]
    EnumerationCap { needed: u128, cap: u128 },
    #[error("column `{0}` has a non-enumerable covariate model")]
    NotEnumerable(String),
    #[error("every replicate was degenerate at every N; choose a better importance proposal")]
    AllDegenerate,
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
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("{0}")]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
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
}
