use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("pixel buffer holds {actual} entries, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error("every region was classified as background")]
    NoForeground,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unrecognized image format")]
    UnknownFormat,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated pixel data: need {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("png: {0}")]
    Png(String),
}
