use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {element}: measure {measure:e}")]
    DegenerateElement { element: usize, measure: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("perturbation of node {node} inverts an element even after clamping")]
    Inversion { node: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: unsupported element type {element_type} (line {line}); only triangles (2), tetrahedra (4), lines (1) and points (15) are accepted")]
    UnsupportedElement {
        path: PathBuf,
        line: usize,
        element_type: i64,
    },

    #[error("invalid boundary-value problem: {0}")]
    InvalidSpec(String),

    #[error("smoothing domains were built for a different mesh")]
    StaleDomains,

    #[error("smoothing domain of edge {edge} has an open boundary")]
    OpenDomainBoundary { edge: usize },

    #[error("node {node} receives conflicting Dirichlet values {first} and {second}")]
    ConflictingDirichlet { node: usize, first: f64, second: f64 },

    #[error("system is singular: {0}")]
    Singular(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("Cholesky factorization hit a non-positive pivot")]
    IndefiniteMatrix,

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) | Error::DegenerateElement { .. } => "invalid-mesh",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Inversion { .. } => "perturbation-inversion",
            Error::Parse { .. } | Error::Json(_) => "parse-error",
            Error::UnsupportedElement { .. } => "unsupported-element",
            Error::InvalidSpec(_) | Error::ConflictingDirichlet { .. } => "invalid-spec",
            Error::StaleDomains | Error::OpenDomainBoundary { .. } => "smoothing-error",
            Error::Singular(_) | Error::IndefiniteMatrix => "singular-system",
            Error::NotConverged { .. } => "solver-not-converged",
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                "file-not-found"
            }
            Error::Io { .. } => "io-error",
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
