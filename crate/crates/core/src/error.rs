use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure while reading a point cloud file. Line numbers are 1-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: binary PLY is not supported ({format})")]
    BinaryPly { line: usize, format: String },
    #[error("line {line}: non-numeric token {token:?}")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-finite coordinate {token:?}")]
    NonFinite { line: usize, token: String },
    #[error("line {line}: unexpected end of file, header declared {declared} vertices but {found} were read")]
    UnexpectedEof {
        line: usize,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: file contains no points")]
    NoPoints { line: usize },
    #[error("line {line}: zero-length normal")]
    ZeroNormal { line: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot determine cloud format of {0}")]
    UnknownFormat(PathBuf),
    #[error("xyz format carries positions only; cloud has normals")]
    XyzWithNormals,
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("degenerate neighborhood at point {index}: all neighbors coincide")]
    DegenerateNeighborhood { index: usize },
    #[error("policy diverged: {0}")]
    Diverged(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
