use std::path::PathBuf;

use crate::index::IndexKind;

/// Unified error type for scene loading, computation and serialization.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("manifest error: {0}")]
    ManifestParse(String),

    #[error("band file {path}: {detail}")]
    BandFile { path: PathBuf, detail: String },

    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {actual_width}x{actual_height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        actual_width: usize,
        actual_height: usize,
    },

    #[error("mask dimensions {mask_width}x{mask_height} do not match scene {scene_width}x{scene_height}")]
    MaskDimensionMismatch {
        mask_width: usize,
        mask_height: usize,
        scene_width: usize,
        scene_height: usize,
    },

    #[error("unsupported resampling ratio: {src_width}x{src_height} -> {dst_width}x{dst_height} (integer upscale factors only)")]
    UnsupportedRatio {
        src_width: usize,
        src_height: usize,
        dst_width: usize,
        dst_height: usize,
    },

    #[error("patch at ({x}, {y}) size {size} extends outside {width}x{height}")]
    OutOfBounds {
        x: usize,
        y: usize,
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("patch size {size} exceeds scene extent {width}x{height}")]
    PatchLargerThanScene {
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("no defined pixels in input")]
    NoDefinedPixels,

    #[error("no valid pixels in input")]
    NoValidPixels,

    #[error("value range is degenerate (all defined values equal)")]
    DegenerateRange,

    #[error("no eligible pixel for band maximum")]
    EmptyMaxDomain,

    #[error("window size {0} must be an odd number >= 3")]
    EvenWindow(usize),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("class weight {0} must be positive")]
    NonPositiveWeight(f64),

    #[error("map kind mismatch: expected {expected}, got {actual}")]
    KindMismatch {
        expected: IndexKind,
        actual: IndexKind,
    },

    #[error("unknown palette kind: {0}")]
    UnknownPaletteKind(String),

    #[error("invalid palette: {0}")]
    InvalidPalette(String),

    #[error("format error: {0}")]
    FormatError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by degenerate data rather than bad inputs,
    /// e.g. a constant-valued map handed to an automatic thresholder.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::NoDefinedPixels
                | Error::NoValidPixels
                | Error::DegenerateRange
                | Error::EmptyMaxDomain
                | Error::EmptyMatrix
        )
    }
}
