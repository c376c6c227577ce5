use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate triangle (collinear vertices)")]
    DegenerateFace,
    #[error("degenerate tetrahedron (zero volume)")]
    DegenerateTet,
}

/// Errors raised anywhere in the weight pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("inconsistent tessellation: {0}")]
    Tessellation(String),

    #[error("rule generation failed: {0}")]
    Rule(String),

    #[error("boundary face {face}: {message}")]
    Sliver { face: usize, message: String },

    #[error("tetrahedron {tet}: {message} (stencil {stencil:?})")]
    LocalSolve {
        tet: usize,
        stencil: Vec<usize>,
        message: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures caused by bad files, flags or meshes rather than by
    /// the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Input(_) | Error::Config(_) | Error::Io { .. } | Error::Tessellation(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
