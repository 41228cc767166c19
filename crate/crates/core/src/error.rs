use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported bit depth: maxval {0} (only 8-bit rasters are supported)")]
    UnsupportedDepth(u32),

    #[error("truncated raster: expected {expected} bytes of pixel data, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field too small: {width}x{height}, need at least {min}x{min}")]
    FieldTooSmall { width: usize, height: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level set has no zero crossing (single-signed field)")]
    SingleSigned,

    #[error("mask is degenerate: {0}")]
    DegenerateMask(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("contour band is empty")]
    EmptyBand,

    #[error("weights sum to zero")]
    ZeroWeight,

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("degenerate geometry: ray {ray} has no boundary crossing for the {which} mask")]
    DegenerateRay { ray: usize, which: &'static str },

    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
