//! Command-line front end: file loading, reports and brute-force oracles.

pub mod commands;
pub mod oracle;
pub mod report;
pub mod workspace;

use std::path::PathBuf;

use thiserror::Error;
use treehom_core::{DecideError, HatError, HomError, ParseError, WtahError};

pub use commands::Outcome;
pub use workspace::Workspace;

/// Exit status for a positive answer.
pub const EXIT_OK: i32 = 0;
/// Exit status for parse and validation errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status for inputs outside the decidable class.
pub const EXIT_REJECTED: i32 = 2;
/// Exit status for a negative answer (nonregular, mismatch found).
pub const EXIT_NEGATIVE: i32 = 10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: expected a {expected} block, found a {found} block")]
    WrongKind { path: PathBuf, expected: &'static str, found: &'static str },
    #[error("`{name}` is defined twice")]
    DuplicateName { name: String },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("tree `{tree}`: {message}")]
    BadTree { tree: String, message: String },
    #[error("exactly one of {0} is required")]
    Arguments(&'static str),
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error(transparent)]
    Hat(#[from] HatError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Wtah(#[from] WtahError),
}
