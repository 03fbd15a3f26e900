use std::fmt::Display;
use std::path::PathBuf;

use thiserror::Error;

/// Configuration problems. Every variant renders as a single line naming
/// the offending key.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{key} = {value} is out of range (accepted: {range})")]
    OutOfRange {
        key: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("{key}: cannot parse `{value}` (accepted: {range})")]
    Parse {
        key: String,
        value: String,
        range: &'static str,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("cannot read config file {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
}

impl ConfigError {
    pub fn out_of_range(key: &'static str, value: impl Display, range: &'static str) -> Self {
        Self::OutOfRange {
            key,
            value: value.to_string(),
            range,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GaError {
    #[error("no live sites to place the base station against")]
    NoSites,
    #[error("selection needs at least one fitness value")]
    EmptyPopulation,
    #[error("fitness {value} at index {index} is not strictly positive")]
    NonPositiveFitness { index: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
