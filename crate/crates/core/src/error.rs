use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing sidecar descriptor {0}")]
    MissingSidecar(PathBuf),

    #[error("malformed sidecar {path}: {message}")]
    BadSidecar { path: PathBuf, message: String },

    #[error("unsupported voxel dtype {0:?} (only \"u8\" is supported)")]
    UnsupportedDtype(String),

    #[error("size mismatch: expected {expected} voxels, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid dimensions {0:?}")]
    InvalidDims([usize; 3]),

    #[error("intensity {value} at index {index} lies outside [{lo}, {hi}]")]
    IntensityOutOfRange { index: usize, value: f64, lo: f64, hi: f64 },

    #[error("binary volume contains label {value} at index {index}")]
    NotBinary { index: usize, value: f64 },

    #[error("slice index {z} out of range for depth {nz}")]
    SliceOutOfRange { z: usize, nz: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse filter spec {input:?}: {message}")]
    FilterSyntax { input: String, message: String },

    #[error("histogram is degenerate (fewer than two occupied bins); no threshold exists")]
    DegenerateHistogram,

    #[error("segmentation contains no material voxels")]
    NoMaterial,

    #[error("empty voxel set")]
    EmptyComponent,

    #[error("empty parameter grid")]
    EmptyGrid,

    #[error("sweep grid must vary exactly two parameters: {0}")]
    NotTwoDimensional(String),

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error("porosity target {target} unreachable within {attempts} attempts (reached {reached:.4})")]
    PorosityUnreachable { target: f64, reached: f64, attempts: usize },

    #[error("report output failed: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Report(e.to_string())
    }
}
