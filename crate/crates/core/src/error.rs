use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("isolated node {node}: zero weighted degree")]
    IsolatedNode { node: usize },

    #[error("degenerate bandwidth: all pairwise feature distances are zero")]
    DegenerateBandwidth,

    #[error("graph collapsed under culling: {survivors} node(s) left")]
    GraphCollapsed { survivors: usize },

    #[error("view size mismatch: view {view} has {found} nodes, expected {expected}")]
    ViewSizeMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },

    #[error("graph is disconnected: {components} components")]
    Disconnected { components: usize },

    #[error("fused graph has isolated node {node}")]
    FusedIsolatedNode { node: usize },

    #[error("fused graph disconnected: {components} components")]
    FusedDisconnected { components: usize },

    #[error("degenerate dissimilarity: entry ({row}, {col}) is {value}")]
    DegenerateDissimilarity { row: usize, col: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("will not converge: spectral radius estimate {radius} >= {limit}")]
    WillNotConverge { radius: f64, limit: f64 },

    #[error("spectral radius iteration did not converge after {iterations} iterations")]
    RadiusNotConverged { iterations: usize },

    #[error("singular system (I - W): pivot ratio {pivot_ratio:e}")]
    Singular { pivot_ratio: f64 },

    #[error("numeric error in {stage}: {detail}")]
    Numeric { stage: &'static str, detail: String },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::WillNotConverge { .. }
            | Error::RadiusNotConverged { .. }
            | Error::Singular { .. }
            | Error::Numeric { .. }
            | Error::Eigen(_) => 3,
            Error::Io { .. } | Error::Parse { .. } | Error::Json { .. } => 4,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
