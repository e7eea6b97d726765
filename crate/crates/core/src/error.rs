use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {node} out of range for a graph with {n} nodes")]
    IndexOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) has non-positive weight {w}")]
    NonPositiveWeight { u: usize, v: usize, w: f64 },
    #[error("{what} must be at least {min}, got {got}")]
    TooSmall {
        what: &'static str,
        got: usize,
        min: usize,
    },
    #[error("node {0} has zero degree")]
    IsolatedNode(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("symmetric eigensolver did not converge")]
    NoConvergence,
    #[error("split index {split} invalid for a {colors}-coloring (need 1 <= l < K)")]
    BadSplitIndex { split: usize, colors: usize },
    #[error("inconsistent extension: {0}")]
    InconsistentExtension(String),
    #[error("joint Laplacian of size {size} exceeds the materialization limit {limit}")]
    TooLargeToMaterialize { size: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0} graph is not bipartite under the given bipartition")]
    NotBipartite(&'static str),
    #[error("reference signal is identically zero")]
    ZeroReference,
    #[error("invalid patient-zero node {0}")]
    BadPatientZero(usize),
    #[error("need at least 3 frames, got {0}")]
    TooFewFrames(usize),
    #[error("unreadable image {path}: {reason}")]
    UnreadableImage { path: String, reason: String },
    #[error("numerical consistency check failed: {0}")]
    Numerical(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures reading or writing files, as opposed to validation
    /// or numeric failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::UnreadableImage { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
