use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt image header in {path}: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },

    #[error("unsupported output extension for {path}: expected .png, .ppm or .pgm")]
    UnsupportedExtension { path: PathBuf },

    #[error("invalid image geometry: {0}")]
    InvalidImage(String),

    #[error("embed plan invariant violated: {0}")]
    PlanInvariant(String),

    #[error("dimension mismatch: {a_width}x{a_height}x{a_channels} vs {b_width}x{b_height}x{b_channels}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        a_channels: u8,
        b_width: u32,
        b_height: u32,
        b_channels: u8,
    },

    #[error("image {width}x{height} is too small for detection (minimum {min}x{min})")]
    ImageTooSmall { width: u32, height: u32, min: u32 },

    #[error("corpus needs at least 2 images, found {0}")]
    CorpusTooSmall(usize),

    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
