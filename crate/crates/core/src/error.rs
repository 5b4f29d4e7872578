use std::fmt;
use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single failed parameter check: which field, and the bound it broke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("grid has no valid samples")]
    EmptyGrid,

    #[error("{source_name}:{line}: value {value} is not a valid AOT sample (must be finite and >= 0)")]
    Domain {
        source_name: String,
        line: usize,
        value: f64,
    },

    #[error("modes {first} and {second} are {distance:.6} deg apart, closer than 4 x max sigma = {required:.6} deg")]
    Separation {
        first: usize,
        second: usize,
        distance: f64,
        required: f64,
    },

    #[error("grid date {grid} does not match peak date {peak}")]
    DateMismatch { grid: NaiveDate, peak: NaiveDate },

    #[error("no input grids found in {0}")]
    NoInput(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid(vec![Violation::new(field, message)])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
