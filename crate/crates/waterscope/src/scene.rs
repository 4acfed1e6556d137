//! Scene manifests, band rasters and patch sampling.
//!
//! A scene is described by a JSON manifest naming six single-band TIFF
//! files. Bands are stored as digital numbers (u16); loading divides by
//! the manifest's `reflectance_scale` to obtain surface reflectance and
//! resamples 20 m bands to the manifest grid by nearest neighbor.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::segment::BinaryMask;

pub const DEFAULT_REFLECTANCE_SCALE: f64 = 10000.0;
pub const DEFAULT_PATCH_SIZE: usize = 512;
pub const DEFAULT_PATCH_COUNT: usize = 25;
pub const DEFAULT_MIN_WATER_FRACTION: f64 = 0.015;
pub const DEFAULT_MAX_ATTEMPTS_PER_PATCH: usize = 1000;

/// The six spectral bands the toolkit consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BandId {
    B02,
    B03,
    B04,
    B08,
    B11,
    B12,
}

impl BandId {
    pub const ALL: [BandId; 6] = [
        BandId::B02,
        BandId::B03,
        BandId::B04,
        BandId::B08,
        BandId::B11,
        BandId::B12,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BandId::B02 => "B02",
            BandId::B03 => "B03",
            BandId::B04 => "B04",
            BandId::B08 => "B08",
            BandId::B11 => "B11",
            BandId::B12 => "B12",
        }
    }
}

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "B02" => Ok(BandId::B02),
            "B03" => Ok(BandId::B03),
            "B04" => Ok(BandId::B04),
            "B08" => Ok(BandId::B08),
            "B11" => Ok(BandId::B11),
            "B12" => Ok(BandId::B12),
            other => Err(Error::ManifestParse(format!("unknown band {other:?}"))),
        }
    }
}

/// Location and native ground resolution of one band file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSource {
    /// Band file path, relative to the manifest directory.
    pub path: String,
    pub native_resolution_m: u32,
}

/// Parsed scene manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneManifest {
    pub scene_id: String,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_scale")]
    pub reflectance_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodata_dn: Option<u16>,
    pub bands: BTreeMap<BandId, BandSource>,
}

fn default_scale() -> f64 {
    DEFAULT_REFLECTANCE_SCALE
}

impl SceneManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: SceneManifest =
            serde_json::from_str(text).map_err(|e| Error::ManifestParse(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::ManifestParse(format!(
                "scene dimensions {}x{} must be positive",
                self.width, self.height
            )));
        }
        if !self.reflectance_scale.is_finite() || self.reflectance_scale <= 0.0 {
            return Err(Error::ManifestParse(format!(
                "reflectance_scale {} must be a positive number",
                self.reflectance_scale
            )));
        }
        for band in BandId::ALL {
            let source = self
                .bands
                .get(&band)
                .ok_or_else(|| Error::ManifestParse(format!("missing band {band}")))?;
            if source.native_resolution_m != 10 && source.native_resolution_m != 20 {
                return Err(Error::ManifestParse(format!(
                    "band {band}: native_resolution_m {} is not 10 or 20",
                    source.native_resolution_m
                )));
            }
            if source.path.is_empty() {
                return Err(Error::ManifestParse(format!("band {band}: empty path")));
            }
        }
        Ok(())
    }
}

/// A single band resampled to the scene grid, in reflectance units.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGrid {
    width: usize,
    height: usize,
    native_resolution_m: u32,
    values: Vec<f64>,
}

impl BandGrid {
    pub fn new(
        width: usize,
        height: usize,
        native_resolution_m: u32,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::FormatError(format!(
                "band buffer length {} does not match {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::FormatError("band values must be finite".into()));
        }
        Ok(BandGrid {
            width,
            height,
            native_resolution_m,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn native_resolution_m(&self) -> u32 {
        self.native_resolution_m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Nearest-neighbor upsampling: out(x, y) = src(floor(x*sw/tw), floor(y*sh/th)).
/// Only integer upscale factors per axis are supported.
pub fn resample_nearest(band: &BandGrid, width: usize, height: usize) -> Result<BandGrid> {
    let values = resample_nearest_buf(&band.values, band.width, band.height, width, height)?;
    BandGrid::new(width, height, band.native_resolution_m, values)
}

fn resample_nearest_buf<T: Copy + Send + Sync>(
    src: &[T],
    sw: usize,
    sh: usize,
    tw: usize,
    th: usize,
) -> Result<Vec<T>> {
    if sw == 0 || sh == 0 || tw < sw || th < sh || !tw.is_multiple_of(sw) || !th.is_multiple_of(sh)
    {
        return Err(Error::UnsupportedRatio {
            src_width: sw,
            src_height: sh,
            dst_width: tw,
            dst_height: th,
        });
    }
    let mut out = Vec::with_capacity(tw * th);
    for y in 0..th {
        let sy = y * sh / th;
        for x in 0..tw {
            let sx = x * sw / tw;
            out.push(src[sy * sw + sx]);
        }
    }
    Ok(out)
}

/// A fully loaded scene: six coregistered reflectance bands plus the
/// combined validity mask derived from the manifest's nodata value.
#[derive(Debug, Clone)]
pub struct Scene {
    manifest: SceneManifest,
    bands: BTreeMap<BandId, BandGrid>,
    valid: Vec<bool>,
}

impl Scene {
    /// Assembles a scene from already-loaded parts, enforcing that every
    /// band matches the manifest grid.
    pub fn from_parts(
        manifest: SceneManifest,
        bands: BTreeMap<BandId, BandGrid>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        manifest.validate()?;
        for band in BandId::ALL {
            let grid = bands
                .get(&band)
                .ok_or_else(|| Error::ManifestParse(format!("missing band {band}")))?;
            if grid.width != manifest.width || grid.height != manifest.height {
                return Err(Error::DimensionMismatch {
                    expected_width: manifest.width,
                    expected_height: manifest.height,
                    actual_width: grid.width,
                    actual_height: grid.height,
                });
            }
        }
        if valid.len() != manifest.width * manifest.height {
            return Err(Error::FormatError(format!(
                "validity buffer length {} does not match {}x{}",
                valid.len(),
                manifest.width,
                manifest.height
            )));
        }
        Ok(Scene {
            manifest,
            bands,
            valid,
        })
    }

    /// Builds an in-memory scene directly from reflectance buffers on a
    /// 10 m grid, with a synthesized manifest.
    pub fn from_reflectance(
        scene_id: &str,
        width: usize,
        height: usize,
        band_values: BTreeMap<BandId, Vec<f64>>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let mut bands = BTreeMap::new();
        let mut sources = BTreeMap::new();
        for (id, values) in band_values {
            bands.insert(id, BandGrid::new(width, height, 10, values)?);
            sources.insert(
                id,
                BandSource {
                    path: format!("{id}.tif"),
                    native_resolution_m: 10,
                },
            );
        }
        let manifest = SceneManifest {
            scene_id: scene_id.to_string(),
            width,
            height,
            reflectance_scale: DEFAULT_REFLECTANCE_SCALE,
            nodata_dn: None,
            bands: sources,
        };
        Scene::from_parts(manifest, bands, valid)
    }

    pub fn manifest(&self) -> &SceneManifest {
        &self.manifest
    }

    pub fn width(&self) -> usize {
        self.manifest.width
    }

    pub fn height(&self) -> usize {
        self.manifest.height
    }

    pub fn band(&self, id: BandId) -> &BandGrid {
        &self.bands[&id]
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.manifest.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Reads the manifest at `path` and loads all six bands.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ManifestParse(format!("{}: {e}", path.display())))?;
    let manifest = SceneManifest::from_json(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let (w, h) = (manifest.width, manifest.height);
    let mut valid = vec![true; w * h];
    let mut bands = BTreeMap::new();
    for band in BandId::ALL {
        let source = &manifest.bands[&band];
        let band_path = base.join(&source.path);
        let (raw, bw, bh) = formats::read_band_tiff(&band_path)?;
        let factor = (source.native_resolution_m / 10) as usize;
        let (ew, eh) = expected_native_dims(w, h, factor)?;
        if bw != ew || bh != eh {
            return Err(Error::DimensionMismatch {
                expected_width: ew,
                expected_height: eh,
                actual_width: bw,
                actual_height: bh,
            });
        }
        let dn = if factor == 1 {
            raw
        } else {
            resample_nearest_buf(&raw, bw, bh, w, h)?
        };
        if let Some(nodata) = manifest.nodata_dn {
            for (v, d) in valid.iter_mut().zip(dn.iter()) {
                if *d == nodata {
                    *v = false;
                }
            }
        }
        let values = dn
            .into_iter()
            .map(|d| d as f64 / manifest.reflectance_scale)
            .collect();
        bands.insert(
            band,
            BandGrid::new(w, h, source.native_resolution_m, values)?,
        );
    }
    Scene::from_parts(manifest, bands, valid)
}

fn expected_native_dims(w: usize, h: usize, factor: usize) -> Result<(usize, usize)> {
    if factor == 1 {
        return Ok((w, h));
    }
    if !w.is_multiple_of(factor) || !h.is_multiple_of(factor) {
        return Err(Error::UnsupportedRatio {
            src_width: w / factor,
            src_height: h / factor,
            dst_width: w,
            dst_height: h,
        });
    }
    Ok((w / factor, h / factor))
}

/// Axis-aligned square patch location within a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    #[serde(rename = "x")]
    pub origin_x: usize,
    #[serde(rename = "y")]
    pub origin_y: usize,
    pub size: usize,
}

/// Result of water-biased sampling: the accepted patches plus a flag for
/// runs that could not find the requested number of qualifying patches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledPatches {
    pub patches: Vec<PatchSpec>,
    pub shortfall: bool,
}

/// Cuts the square window described by `spec` out of `scene`.
pub fn extract_patch(scene: &Scene, spec: &PatchSpec) -> Result<Scene> {
    let (w, h) = (scene.width(), scene.height());
    if spec.origin_x + spec.size > w || spec.origin_y + spec.size > h {
        return Err(Error::OutOfBounds {
            x: spec.origin_x,
            y: spec.origin_y,
            size: spec.size,
            width: w,
            height: h,
        });
    }
    let mut manifest = scene.manifest.clone();
    manifest.width = spec.size;
    manifest.height = spec.size;

    let mut bands = BTreeMap::new();
    for band in BandId::ALL {
        let src = scene.band(band);
        let mut values = Vec::with_capacity(spec.size * spec.size);
        for y in spec.origin_y..spec.origin_y + spec.size {
            let row = &src.values[y * w + spec.origin_x..y * w + spec.origin_x + spec.size];
            values.extend_from_slice(row);
        }
        bands.insert(
            band,
            BandGrid::new(spec.size, spec.size, src.native_resolution_m, values)?,
        );
    }
    let mut valid = Vec::with_capacity(spec.size * spec.size);
    for y in spec.origin_y..spec.origin_y + spec.size {
        valid.extend_from_slice(
            &scene.valid[y * w + spec.origin_x..y * w + spec.origin_x + spec.size],
        );
    }
    Scene::from_parts(manifest, bands, valid)
}

/// Fraction of water pixels among valid pixels inside one patch window.
/// Returns None when the window contains no valid pixel.
fn patch_water_fraction(
    scene: &Scene,
    water: &BinaryMask,
    origin_x: usize,
    origin_y: usize,
    size: usize,
) -> Option<f64> {
    let w = scene.width();
    let mut valid = 0usize;
    let mut wet = 0usize;
    for y in origin_y..origin_y + size {
        for x in origin_x..origin_x + size {
            let i = y * w + x;
            if scene.valid[i] {
                valid += 1;
                if water.water()[i] {
                    wet += 1;
                }
            }
        }
    }
    if valid == 0 {
        None
    } else {
        Some(wet as f64 / valid as f64)
    }
}

/// Draws training patches biased toward water.
///
/// Candidate origins are drawn uniformly (with replacement) over all
/// in-bounds origins; a candidate qualifies when its water fraction over
/// valid pixels reaches `min_water_fraction` (inclusive). Stops after
/// `count` acceptances or `max_attempts` draws, whichever comes first.
#[allow(clippy::too_many_arguments)]
pub fn sample_water_biased_patches(
    scene: &Scene,
    water: &BinaryMask,
    count: usize,
    size: usize,
    min_water_fraction: f64,
    seed: u64,
    max_attempts: Option<usize>,
) -> Result<SampledPatches> {
    if water.width() != scene.width() || water.height() != scene.height() {
        return Err(Error::MaskDimensionMismatch {
            mask_width: water.width(),
            mask_height: water.height(),
            scene_width: scene.width(),
            scene_height: scene.height(),
        });
    }
    if size > scene.width() || size > scene.height() {
        return Err(Error::PatchLargerThanScene {
            size,
            width: scene.width(),
            height: scene.height(),
        });
    }
    let max_attempts = max_attempts.unwrap_or(DEFAULT_MAX_ATTEMPTS_PER_PATCH * count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_range = scene.width() - size;
    let y_range = scene.height() - size;
    let mut patches = Vec::with_capacity(count);
    for _ in 0..max_attempts {
        if patches.len() >= count {
            break;
        }
        let x = rng.gen_range(0..=x_range);
        let y = rng.gen_range(0..=y_range);
        if let Some(f) = patch_water_fraction(scene, water, x, y, size) {
            if f >= min_water_fraction {
                patches.push(PatchSpec {
                    origin_x: x,
                    origin_y: y,
                    size,
                });
            }
        }
    }
    let shortfall = patches.len() < count;
    Ok(SampledPatches { patches, shortfall })
}
