use std::path::PathBuf;

/// Errors produced by the descriptor pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("sample at ({x}, {y}) is out of bounds: {reason}")]
    OutOfBounds { x: usize, y: usize, reason: String },

    #[error("unsupported image format: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("image has no valid pixels for radius {radius}: {width}x{height}")]
    EmptyValidRegion { width: usize, height: usize, radius: f64 },

    #[error("class {label} has {count} training item(s); at least 2 are required")]
    TooFewSamples { label: usize, count: usize },

    #[error("gallery is empty")]
    EmptyGallery,

    #[error("manifest {path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
