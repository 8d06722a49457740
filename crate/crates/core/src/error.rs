use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate weights")]
    DegenerateWeights,

    #[error("invalid target handle")]
    InvalidHandle,

    #[error("unstable detection under perturbation")]
    UnstableDetection,

    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("adapter `{name}` failed: {message}")]
    Adapter { name: String, message: String },

    #[error("unknown adapter `{0}`")]
    UnknownAdapter(String),

    #[error("insufficient alignment: matched fraction {fraction:.3} below {required:.3}")]
    InsufficientAlignment { fraction: f64, required: f64 },

    #[error("degenerate polygon: {0} vertices")]
    DegeneratePolygon(usize),

    #[error("empty ground truth")]
    EmptyGroundTruth,

    #[error("empty saliency mask")]
    EmptySaliencyMask,

    #[error("mask shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("cannot place blobs after {0} attempts")]
    CannotPlaceBlobs(usize),

    #[error("RLE unsupported (annotation {0})")]
    RleUnsupported(u64),

    #[error("malformed annotations: {0}")]
    Annotations(String),

    #[error("malformed map file {path}: {message}")]
    MapFormat { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Png {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn png(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Png {
            path: path.into(),
            source,
        }
    }
}
