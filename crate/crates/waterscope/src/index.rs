//! Spectral index computation.
//!
//! All indices operate on surface reflectance and share one division
//! rule: a pixel is defined only where the scene is valid and the
//! denominator is nonzero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compute_rows, RasterView, ValueGrid};
use crate::scene::{BandId, Scene};
use crate::segment::BinaryMask;

/// Supported spectral index kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Ndwi,
    Mndwi,
    Turbidity,
    Ndci,
    Ndosi,
    RelBathymetry,
}

impl IndexKind {
    pub const ALL: [IndexKind; 6] = [
        IndexKind::Ndwi,
        IndexKind::Mndwi,
        IndexKind::Turbidity,
        IndexKind::Ndci,
        IndexKind::Ndosi,
        IndexKind::RelBathymetry,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IndexKind::Ndwi => "ndwi",
            IndexKind::Mndwi => "mndwi",
            IndexKind::Turbidity => "turbidity",
            IndexKind::Ndci => "ndci",
            IndexKind::Ndosi => "ndosi",
            IndexKind::RelBathymetry => "rel_bathymetry",
        }
    }

    /// Closed value range the index is guaranteed to stay in, with
    /// +inf marking an unbounded upper end.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            IndexKind::Ndwi | IndexKind::Mndwi | IndexKind::Ndci | IndexKind::Ndosi => (-1.0, 1.0),
            IndexKind::Turbidity => (0.0, f64::INFINITY),
            IndexKind::RelBathymetry => (0.0, 1.0),
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ndwi" => Ok(IndexKind::Ndwi),
            "mndwi" => Ok(IndexKind::Mndwi),
            "turbidity" => Ok(IndexKind::Turbidity),
            "ndci" => Ok(IndexKind::Ndci),
            "ndosi" => Ok(IndexKind::Ndosi),
            "rel_bathymetry" | "depth" => Ok(IndexKind::RelBathymetry),
            other => Err(Error::FormatError(format!("unknown index kind {other:?}"))),
        }
    }
}

/// A computed spectral index raster.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    pub kind: IndexKind,
    pub grid: ValueGrid,
}

impl RasterView for IndexMap {
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

/// (a - b) / (a + b) over two equally sized buffers; undefined where the
/// validity mask is false or a + b == 0.
pub fn normalized_difference(
    width: usize,
    height: usize,
    a: &[f64],
    b: &[f64],
    valid: &[bool],
) -> Result<ValueGrid> {
    let n = width * height;
    if a.len() != n || b.len() != n || valid.len() != n {
        return Err(Error::FormatError(format!(
            "normalized difference buffers do not match {width}x{height}"
        )));
    }
    let mut values = vec![f64::NAN; n];
    let mut defined = vec![false; n];
    compute_rows(width, &mut values, &mut defined, |y, vrow, drow| {
        let base = y * width;
        for x in 0..width {
            let i = base + x;
            if !valid[i] {
                continue;
            }
            let denom = a[i] + b[i];
            if denom != 0.0 {
                vrow[x] = (a[i] - b[i]) / denom;
                drow[x] = true;
            }
        }
    });
    ValueGrid::from_parts(width, height, values, defined)
}

fn ratio_sum(scene: &Scene) -> (usize, usize, Vec<f64>) {
    let (w, h) = (scene.width(), scene.height());
    let b02 = scene.band(BandId::B02).values();
    let b03 = scene.band(BandId::B03).values();
    let b04 = scene.band(BandId::B04).values();
    let sum: Vec<f64> = (0..w * h).map(|i| b02[i] + b03[i] + b04[i]).collect();
    (w, h, sum)
}

/// Computes one spectral index over a scene.
///
/// When a water mask is given the result is restricted to water pixels.
/// For relative bathymetry the mask additionally narrows the domain of
/// the B08 maximum to defined water, so the output stays in [0, 1].
pub fn compute_index(
    scene: &Scene,
    kind: IndexKind,
    water: Option<&BinaryMask>,
) -> Result<IndexMap> {
    if let Some(mask) = water {
        if mask.width() != scene.width() || mask.height() != scene.height() {
            return Err(Error::MaskDimensionMismatch {
                mask_width: mask.width(),
                mask_height: mask.height(),
                scene_width: scene.width(),
                scene_height: scene.height(),
            });
        }
    }
    let (w, h) = (scene.width(), scene.height());
    let valid = scene.valid();
    let grid = match kind {
        IndexKind::Ndwi => normalized_difference(
            w,
            h,
            scene.band(BandId::B03).values(),
            scene.band(BandId::B08).values(),
            valid,
        )?,
        IndexKind::Mndwi => normalized_difference(
            w,
            h,
            scene.band(BandId::B03).values(),
            scene.band(BandId::B11).values(),
            valid,
        )?,
        IndexKind::Ndci => normalized_difference(
            w,
            h,
            scene.band(BandId::B03).values(),
            scene.band(BandId::B04).values(),
            valid,
        )?,
        IndexKind::Ndosi => {
            let (w, h, sum) = ratio_sum(scene);
            normalized_difference(w, h, scene.band(BandId::B11).values(), &sum, valid)?
        }
        IndexKind::Turbidity => {
            let b02 = scene.band(BandId::B02).values();
            let b03 = scene.band(BandId::B03).values();
            let b04 = scene.band(BandId::B04).values();
            let mut values = vec![f64::NAN; w * h];
            let mut defined = vec![false; w * h];
            compute_rows(w, &mut values, &mut defined, |y, vrow, drow| {
                let base = y * w;
                for x in 0..w {
                    let i = base + x;
                    if valid[i] && b02[i] != 0.0 {
                        vrow[x] = (b04[i] + b03[i]) / b02[i];
                        drow[x] = true;
                    }
                }
            });
            ValueGrid::from_parts(w, h, values, defined)?
        }
        IndexKind::RelBathymetry => rel_bathymetry_grid(scene, water)?,
    };
    let mut map = IndexMap { kind, grid };
    if let Some(mask) = water {
        map = apply_mask(&map, mask)?;
    }
    Ok(map)
}

fn rel_bathymetry_grid(scene: &Scene, water: Option<&BinaryMask>) -> Result<ValueGrid> {
    let (w, h) = (scene.width(), scene.height());
    let valid = scene.valid();
    let b08 = scene.band(BandId::B08).values();
    let eligible = |i: usize| -> bool {
        valid[i]
            && match water {
                Some(mask) => mask.water()[i] && mask.valid()[i],
                None => true,
            }
    };
    let mut b08_max = f64::NEG_INFINITY;
    let mut any = false;
    for (i, &v) in b08.iter().enumerate() {
        if eligible(i) {
            any = true;
            if v > b08_max {
                b08_max = v;
            }
        }
    }
    if !any {
        return Err(Error::EmptyMaxDomain);
    }
    let mut values = vec![f64::NAN; w * h];
    let mut defined = vec![false; w * h];
    if b08_max > 0.0 {
        compute_rows(w, &mut values, &mut defined, |y, vrow, drow| {
            let base = y * w;
            for x in 0..w {
                let i = base + x;
                if eligible(i) {
                    vrow[x] = 1.0 - b08[i] / b08_max;
                    drow[x] = true;
                }
            }
        });
    }
    ValueGrid::from_parts(w, h, values, defined)
}

/// Keeps only pixels that are water in `mask`; everything else becomes
/// undefined. Dimensions must match.
pub fn apply_mask(map: &IndexMap, mask: &BinaryMask) -> Result<IndexMap> {
    if mask.width() != map.grid.width() || mask.height() != map.grid.height() {
        return Err(Error::MaskDimensionMismatch {
            mask_width: mask.width(),
            mask_height: mask.height(),
            scene_width: map.grid.width(),
            scene_height: map.grid.height(),
        });
    }
    let n = map.grid.len();
    let mut values = map.grid.values().to_vec();
    let mut defined = map.grid.defined().to_vec();
    for i in 0..n {
        if !(mask.water()[i] && mask.valid()[i]) {
            values[i] = f64::NAN;
            defined[i] = false;
        }
    }
    Ok(IndexMap {
        kind: map.kind,
        grid: ValueGrid::from_parts(map.grid.width(), map.grid.height(), values, defined)?,
    })
}
