use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while decoding GMS1/GMSV byte streams.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 4], expected: &'static str },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown dtype code {0}")]
    UnknownDtype(u8),
    #[error("dtype code {found} not valid here, expected {expected}")]
    WrongDtype { found: u8, expected: u8 },
    #[error("reserved header field must be zero, found {0}")]
    NonZeroReserved(u16),
    #[error("dimensions overflow: {0}")]
    DimensionOverflow(String),
    #[error("zero-sized dimension: {0}")]
    EmptyDimension(&'static str),
    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid channel id: {0}")]
    InvalidChannelId(String),
    #[error("mask byte {value} at element {index} is neither 0 nor 1")]
    InvalidMaskByte { index: usize, value: u8 },
    #[error("payload does not form a valid {kind}: {reason}")]
    InvalidPayload { kind: &'static str, reason: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in {path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error(transparent)]
    Decode(#[from] FormatError),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid label map: {0}")]
    InvalidLabels(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field is constant ({0}); no threshold separates it")]
    ConstantField(f64),
    #[error(
        "no seed component reaches {min_seed_area} pixels ({largest} is the largest); use a smaller minimum seed area"
    )]
    NoMarkers { min_seed_area: usize, largest: usize },
    #[error("marker map is empty")]
    EmptyMarkers,
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("scene spec: {0}")]
    SceneSpec(String),
}

impl Error {
    /// True for failures caused by file access or file content, as opposed to
    /// algorithmic preconditions or invalid parameters.
    pub fn is_io_or_format(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Format { .. } | Error::Decode(_) | Error::DimensionMismatch(_))
    }

    /// True for failures where the input was well-formed but the algorithm
    /// could not proceed (constant gradient, no markers, empty table).
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::ConstantField(_) | Error::NoMarkers { .. } | Error::EmptyMarkers | Error::EmptyTable)
    }
}
