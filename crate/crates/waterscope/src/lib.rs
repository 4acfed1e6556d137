//! Inland water analysis for six-band multispectral scenes.
//!
//! The crate covers the full pipeline from raw band files to reports:
//!
//! * [`scene`] - manifests, band loading, resampling, patch sampling
//! * [`index`] - spectral water and quality indices
//! * [`segment`] - fixed and Otsu thresholding, mask I/O
//! * [`stats`] - local variability, homogeneity, masked summaries,
//!   depth profiles
//! * [`eval`] - confusion-matrix metrics and training losses
//! * [`palette`] / [`render`] - standardized palettes and figure
//!   rendering
//! * [`formats`] - raster and sidecar serialization
//! * [`synth`] - synthetic scenes with ground truth

pub mod error;
pub mod eval;
pub mod font;
pub mod formats;
pub mod grid;
pub mod index;
pub mod palette;
pub mod render;
pub mod scene;
pub mod segment;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
