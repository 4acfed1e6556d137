//! Windowed variability statistics and masked summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compute_rows, RasterView, ValueGrid};
use crate::index::{IndexKind, IndexMap};
use crate::segment::BinaryMask;

pub const DEFAULT_SIGMA_WINDOW: usize = 5;
pub const DEFAULT_PROFILE_BINS: usize = 10;

/// Homogeneity class boundaries on local sigma.
pub const SIGMA_STABLE_BELOW: f64 = 0.15;
pub const SIGMA_VARIABLE_ABOVE: f64 = 0.35;

/// Local standard deviation raster derived from one index map.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMap {
    pub source_kind: IndexKind,
    pub window: usize,
    pub grid: ValueGrid,
}

impl RasterView for SigmaMap {
    fn width(&self) -> usize {
        self.grid.width()
    }

    fn height(&self) -> usize {
        self.grid.height()
    }

    fn value(&self, x: usize, y: usize) -> Option<f64> {
        self.grid.at(x, y)
    }
}

/// Population standard deviation of the index inside a square window
/// centered on each water pixel.
///
/// Windows are clipped at the borders rather than padded, and only
/// pixels that are both defined and water contribute. A pixel with
/// fewer than two contributing neighbors is undefined in the output.
pub fn local_sigma(map: &IndexMap, water: &BinaryMask, window: usize) -> Result<SigmaMap> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::EvenWindow(window));
    }
    let (w, h) = (map.grid.width(), map.grid.height());
    if water.width() != w || water.height() != h {
        return Err(Error::MaskDimensionMismatch {
            mask_width: water.width(),
            mask_height: water.height(),
            scene_width: w,
            scene_height: h,
        });
    }
    let r = window / 2;
    let src = map.grid.values();
    let elig: Vec<bool> = (0..w * h)
        .map(|i| map.grid.defined()[i] && water.water()[i] && water.valid()[i])
        .collect();

    let mut values = vec![f64::NAN; w * h];
    let mut defined = vec![false; w * h];
    compute_rows(w, &mut values, &mut defined, |y, vrow, drow| {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for x in 0..w {
            if !elig[y * w + x] {
                continue;
            }
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let mut n = 0usize;
            let mut sum = 0.0f64;
            for wy in y0..=y1 {
                for wx in x0..=x1 {
                    let i = wy * w + wx;
                    if elig[i] {
                        n += 1;
                        sum += src[i];
                    }
                }
            }
            if n < 2 {
                continue;
            }
            let mean = sum / n as f64;
            let mut acc = 0.0f64;
            for wy in y0..=y1 {
                for wx in x0..=x1 {
                    let i = wy * w + wx;
                    if elig[i] {
                        let d = src[i] - mean;
                        acc += d * d;
                    }
                }
            }
            vrow[x] = (acc / n as f64).sqrt();
            drow[x] = true;
        }
    });
    Ok(SigmaMap {
        source_kind: map.kind,
        window,
        grid: ValueGrid::from_parts(w, h, values, defined)?,
    })
}

/// Stability classes assigned from local sigma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Homogeneity {
    Stable,
    Transitional,
    Variable,
}

pub fn classify_sigma(sigma: f64) -> Homogeneity {
    if sigma < SIGMA_STABLE_BELOW {
        Homogeneity::Stable
    } else if sigma > SIGMA_VARIABLE_ABOVE {
        Homogeneity::Variable
    } else {
        Homogeneity::Transitional
    }
}

/// Share of each homogeneity class among defined sigma pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityFractions {
    pub stable: f64,
    pub transitional: f64,
    pub variable: f64,
    pub count: usize,
}

pub fn homogeneity_fractions(sigma: &SigmaMap) -> Result<HomogeneityFractions> {
    let mut counts = [0usize; 3];
    let mut total = 0usize;
    for (_, _, v) in sigma.grid.iter_defined() {
        total += 1;
        match classify_sigma(v) {
            Homogeneity::Stable => counts[0] += 1,
            Homogeneity::Transitional => counts[1] += 1,
            Homogeneity::Variable => counts[2] += 1,
        }
    }
    if total == 0 {
        return Err(Error::NoDefinedPixels);
    }
    Ok(HomogeneityFractions {
        stable: counts[0] as f64 / total as f64,
        transitional: counts[1] as f64 / total as f64,
        variable: counts[2] as f64 / total as f64,
        count: total,
    })
}

/// Summary statistics over the defined pixels of a map, optionally
/// restricted to water.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    pub kind: IndexKind,
    pub count: usize,
    pub mean: f64,
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
}

impl GlobalStats {
    /// Renders "mean +/- sigma" with two decimals, e.g. `3.39 ± 0.37`.
    pub fn summary(&self) -> String {
        format!("{:.2} \u{b1} {:.2}", self.mean, self.sigma)
    }
}

/// Mean, population sigma and range of an index over water pixels.
pub fn masked_stats(map: &IndexMap, water: Option<&BinaryMask>) -> Result<GlobalStats> {
    if let Some(mask) = water {
        if mask.width() != map.grid.width() || mask.height() != map.grid.height() {
            return Err(Error::MaskDimensionMismatch {
                mask_width: mask.width(),
                mask_height: mask.height(),
                scene_width: map.grid.width(),
                scene_height: map.grid.height(),
            });
        }
    }
    let w = map.grid.width();
    let included = |x: usize, y: usize| -> bool {
        match water {
            Some(mask) => mask.water()[y * w + x] && mask.valid()[y * w + x],
            None => true,
        }
    };
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (x, y, v) in map.grid.iter_defined() {
        if included(x, y) {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
    }
    if n == 0 {
        return Err(Error::NoDefinedPixels);
    }
    let mean = sum / n as f64;
    let mut acc = 0.0;
    for (x, y, v) in map.grid.iter_defined() {
        if included(x, y) {
            let d = v - mean;
            acc += d * d;
        }
    }
    Ok(GlobalStats {
        kind: map.kind,
        count: n,
        mean,
        sigma: (acc / n as f64).sqrt(),
        min,
        max,
    })
}

/// One depth bin of a profile: range, occupancy and index statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub depth_lo: f64,
    pub depth_hi: f64,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

/// Index values grouped by relative depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthProfile {
    pub index_kind: IndexKind,
    pub pairs: Vec<(f64, f64)>,
    pub bins: Vec<ProfileBin>,
}

/// Pairs each water pixel's relative depth with an index value and bins
/// the pairs over the observed depth range.
///
/// `depth_scale` converts relative depth to approximate physical units
/// before binning; pairs are (scaled depth, index value).
pub fn depth_profile(
    index: &IndexMap,
    depth: &IndexMap,
    water: &BinaryMask,
    bin_count: usize,
    depth_scale: Option<f64>,
) -> Result<DepthProfile> {
    if depth.kind != IndexKind::RelBathymetry {
        return Err(Error::KindMismatch {
            expected: IndexKind::RelBathymetry,
            actual: depth.kind,
        });
    }
    index.grid.same_dims(&depth.grid)?;
    if water.width() != index.grid.width() || water.height() != index.grid.height() {
        return Err(Error::MaskDimensionMismatch {
            mask_width: water.width(),
            mask_height: water.height(),
            scene_width: index.grid.width(),
            scene_height: index.grid.height(),
        });
    }
    if bin_count == 0 {
        return Err(Error::FormatError("profile needs at least one bin".into()));
    }
    let scale = depth_scale.unwrap_or(1.0);
    let w = index.grid.width();
    let mut pairs = Vec::new();
    for (x, y, v) in index.grid.iter_defined() {
        let i = y * w + x;
        if !(water.water()[i] && water.valid()[i]) {
            continue;
        }
        if let Some(d) = depth.grid.at(x, y) {
            pairs.push((d * scale, v));
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoDefinedPixels);
    }
    let dmin = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let dmax = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = dmax - dmin;
    let width = span / bin_count as f64;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bin_count];
    for (d, v) in &pairs {
        let k = if span == 0.0 {
            0
        } else {
            (((d - dmin) / span * bin_count as f64) as usize).min(bin_count - 1)
        };
        members[k].push(*v);
    }
    let bins = members
        .into_iter()
        .enumerate()
        .map(|(k, vs)| {
            let lo = dmin + width * k as f64;
            let hi = if k + 1 == bin_count {
                dmax
            } else {
                dmin + width * (k + 1) as f64
            };
            if vs.is_empty() {
                ProfileBin {
                    depth_lo: lo,
                    depth_hi: hi,
                    count: 0,
                    mean: None,
                    sigma: None,
                }
            } else {
                let n = vs.len() as f64;
                let mean = vs.iter().sum::<f64>() / n;
                let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                ProfileBin {
                    depth_lo: lo,
                    depth_hi: hi,
                    count: vs.len(),
                    mean: Some(mean),
                    sigma: Some(var.sqrt()),
                }
            }
        })
        .collect();
    Ok(DepthProfile {
        index_kind: index.kind,
        pairs,
        bins,
    })
}
