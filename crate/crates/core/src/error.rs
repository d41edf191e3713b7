use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A prime needed by the computation is not covered by the eigenvalue data.
    #[error("no eigenvalue data for prime {prime} (coverage ends at {coverage})")]
    DataGap { prime: u64, coverage: u64 },

    #[error("cannot parse {what} `{input}`: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("{path}:{line}: {reason}")]
    FileFormat { path: PathBuf, line: usize, reason: String },

    #[error("{}: {} eigenvalue(s) exceed the Ramanujan bound |lambda| <= 2 (first: p = {}, lambda = {})",
        .path.display(), .entries.len(), .entries[0].0, .entries[0].1)]
    RamanujanViolation { path: PathBuf, entries: Vec<(u64, f64)> },

    /// An argument outside the operation's domain (e.g. a checkpoint beyond the scan range).
    #[error("{0}")]
    Domain(String),

    #[error("allocation of {required} bytes exceeds the memory cap of {cap} bytes")]
    MemoryCap { required: u64, cap: u64 },

    #[error("need at least {needed} points with |R| > 1e-14 for a fit, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(what: &'static str, input: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.into(),
            reason: reason.into(),
        }
    }
}
