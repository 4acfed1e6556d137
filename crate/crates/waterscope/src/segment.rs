//! Binary water masks and thresholding.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::grid::{RasterView, ValueGrid};
use crate::index::{IndexKind, IndexMap};

pub const DEFAULT_HISTOGRAM_BINS: usize = 256;

/// Fixed thresholds commonly applied to water indices.
pub const PRESET_ZERO: f64 = 0.0;
pub const PRESET_NDWI: f64 = 0.2;
pub const PRESET_MNDWI: f64 = 0.35;

/// How a mask came to be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMethod {
    Fixed,
    Otsu,
    External,
}

impl fmt::Display for MaskMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MaskMethod::Fixed => "fixed",
            MaskMethod::Otsu => "otsu",
            MaskMethod::External => "external",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskProvenance {
    pub method: MaskMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_kind: Option<IndexKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl MaskProvenance {
    pub fn external() -> Self {
        MaskProvenance {
            method: MaskMethod::External,
            source_kind: None,
            threshold: None,
        }
    }
}

/// Per-pixel water / land labeling with validity.
///
/// `water` and `valid` always have length width * height; a pixel's
/// label is only meaningful where `valid` is true.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    water: Vec<bool>,
    valid: Vec<bool>,
    provenance: MaskProvenance,
}

impl BinaryMask {
    pub fn from_parts(
        width: usize,
        height: usize,
        water: Vec<bool>,
        valid: Vec<bool>,
        provenance: MaskProvenance,
    ) -> Result<Self> {
        if water.len() != width * height || valid.len() != width * height {
            return Err(Error::FormatError(format!(
                "mask buffer length {} does not match {}x{}",
                water.len(),
                width,
                height
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            water,
            valid,
            provenance,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn water(&self) -> &[bool] {
        &self.water
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn provenance(&self) -> &MaskProvenance {
        &self.provenance
    }

    #[inline]
    pub fn is_water(&self, x: usize, y: usize) -> bool {
        let i = y * self.width + x;
        self.water[i] && self.valid[i]
    }

    pub fn water_count(&self) -> usize {
        self.water
            .iter()
            .zip(self.valid.iter())
            .filter(|(w, v)| **w && **v)
            .count()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Water share among valid pixels.
    pub fn water_fraction(&self) -> Result<f64> {
        let valid = self.valid_count();
        if valid == 0 {
            return Err(Error::NoValidPixels);
        }
        Ok(self.water_count() as f64 / valid as f64)
    }
}

impl RasterView for BinaryMask {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn value(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        if self.valid[i] {
            Some(if self.water[i] { 1.0 } else { 0.0 })
        } else {
            None
        }
    }
}

/// Labels water where the index value strictly exceeds `threshold`.
/// Undefined pixels become invalid in the output mask.
pub fn threshold_fixed(map: &IndexMap, threshold: f64) -> Result<BinaryMask> {
    let grid = &map.grid;
    let n = grid.len();
    let mut water = vec![false; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        if grid.defined()[i] {
            valid[i] = true;
            water[i] = grid.values()[i] > threshold;
        }
    }
    BinaryMask::from_parts(
        grid.width(),
        grid.height(),
        water,
        valid,
        MaskProvenance {
            method: MaskMethod::Fixed,
            source_kind: Some(map.kind),
            threshold: Some(threshold),
        },
    )
}

/// Equal-width histogram over the defined values of a grid.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Builds a histogram spanning [min, max] of the defined values.
    /// Values equal to the maximum land in the last bin.
    pub fn build(grid: &ValueGrid, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::FormatError(
                "histogram needs at least one bin".into(),
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut any = false;
        for (i, d) in grid.defined().iter().enumerate() {
            if *d {
                any = true;
                let v = grid.values()[i];
                if v < lo {
                    lo = v;
                }
                if v > hi {
                    hi = v;
                }
            }
        }
        if !any {
            return Err(Error::NoDefinedPixels);
        }
        if lo == hi {
            return Err(Error::DegenerateRange);
        }
        let mut counts = vec![0u64; bins];
        let span = hi - lo;
        for (i, d) in grid.defined().iter().enumerate() {
            if *d {
                let v = grid.values()[i];
                let mut k = ((v - lo) / span * bins as f64) as usize;
                if k >= bins {
                    k = bins - 1;
                }
                counts[k] += 1;
            }
        }
        Ok(Histogram { lo, hi, counts })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Value at the boundary between bin k-1 and bin k.
    pub fn boundary(&self, k: usize) -> f64 {
        self.lo + self.bin_width() * k as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + self.bin_width() * (k as f64 + 0.5)
    }
}

/// Picks the threshold maximizing between-class variance
/// w0 * w1 * (mu0 - mu1)^2 over all histogram bin boundaries, then
/// applies it. Ties resolve to the lowest threshold.
pub fn threshold_otsu(map: &IndexMap, bins: usize) -> Result<(BinaryMask, f64)> {
    let hist = Histogram::build(&map.grid, bins)?;
    let n = hist.bins();
    let total: u64 = hist.counts.iter().sum();
    let total_sum: f64 = (0..n).map(|k| hist.counts[k] as f64 * hist.center(k)).sum();

    let mut best_var = f64::NEG_INFINITY;
    let mut best_split = 0usize;
    let mut w0 = 0u64;
    let mut sum0 = 0.0f64;
    for k in 0..n - 1 {
        w0 += hist.counts[k];
        sum0 += hist.counts[k] as f64 * hist.center(k);
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let mu0 = sum0 / w0 as f64;
        let mu1 = (total_sum - sum0) / w1 as f64;
        let var = (w0 as f64) * (w1 as f64) * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_split = k;
        }
    }
    let threshold = hist.boundary(best_split + 1);
    let mut mask = threshold_fixed(map, threshold)?;
    mask.provenance = MaskProvenance {
        method: MaskMethod::Otsu,
        source_kind: Some(map.kind),
        threshold: Some(threshold),
    };
    Ok((mask, threshold))
}

/// Loads an externally produced mask PNG (8-bit grayscale, 0 = land,
/// 255 = water) and checks it against the expected dimensions.
pub fn load_external_mask(path: &Path, width: usize, height: usize) -> Result<BinaryMask> {
    let (data, w, h) = formats::read_gray8_png(path)?;
    if w != width || h != height {
        return Err(Error::DimensionMismatch {
            expected_width: width,
            expected_height: height,
            actual_width: w,
            actual_height: h,
        });
    }
    let mut water = vec![false; w * h];
    for (i, byte) in data.iter().enumerate() {
        match byte {
            0 => {}
            255 => water[i] = true,
            other => {
                return Err(Error::FormatError(format!(
                    "mask {} has pixel value {other}; only 0 and 255 are allowed",
                    path.display()
                )))
            }
        }
    }
    BinaryMask::from_parts(w, h, water, vec![true; w * h], MaskProvenance::external())
}
