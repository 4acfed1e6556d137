//! Synthetic scene generation for tests, demos and benchmarks.
//!
//! The generated scene is a circular water body on bright terrain: the
//! disk is dark in NIR/SWIR and carries smooth depth and turbidity
//! gradients, the background is modulated land. Band values are
//! quantized to digital numbers before the scene is assembled, so a
//! scene written to disk and reloaded reproduces the in-memory scene
//! exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::formats;
use crate::scene::{BandId, BandSource, Scene, SceneManifest, DEFAULT_REFLECTANCE_SCALE};
use crate::segment::{BinaryMask, MaskProvenance};

pub const DEFAULT_SYNTH_SIZE: usize = 256;
pub const DEFAULT_WATER_RADIUS_FRAC: f64 = 0.35;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.0015;

/// Generator controls.
#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub size: usize,
    /// Water disk radius as a fraction of the scene edge length.
    pub water_radius_frac: f64,
    pub seed: u64,
    pub noise_sigma: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            size: DEFAULT_SYNTH_SIZE,
            water_radius_frac: DEFAULT_WATER_RADIUS_FRAC,
            seed: 0,
            noise_sigma: DEFAULT_NOISE_SIGMA,
        }
    }
}

/// A generated scene together with its ground-truth water mask.
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub scene: Scene,
    pub truth: BinaryMask,
}

fn land_reflectance(band: BandId, modulation: f64) -> f64 {
    let base = match band {
        BandId::B02 => 0.08,
        BandId::B03 => 0.10,
        BandId::B04 => 0.12,
        BandId::B08 => 0.30,
        BandId::B11 => 0.25,
        BandId::B12 => 0.20,
    };
    base * modulation
}

fn water_reflectance(band: BandId, shallow: f64, tx: f64) -> f64 {
    match band {
        BandId::B02 => 0.055 - 0.005 * tx,
        BandId::B03 => 0.070 + 0.015 * tx,
        BandId::B04 => 0.030 + 0.025 * tx,
        BandId::B08 => 0.004 + 0.030 * shallow,
        BandId::B11 => 0.006 + 0.010 * shallow,
        BandId::B12 => 0.005 + 0.008 * shallow,
    }
}

/// Generates a scene with a water disk centered in the frame.
pub fn generate(opts: &SynthOptions) -> Result<SynthScene> {
    let n = opts.size;
    let scale = DEFAULT_REFLECTANCE_SCALE;
    let radius = opts.water_radius_frac * n as f64;
    let center = (n as f64 - 1.0) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();

    let mut dn: BTreeMap<BandId, Vec<u16>> = BandId::ALL
        .iter()
        .map(|b| (*b, Vec::with_capacity(n * n)))
        .collect();
    let mut water = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let dx = x as f64 - center;
            let dy = y as f64 - center;
            let dist2 = dx * dx + dy * dy;
            let wet = dist2 <= radius * radius;
            water.push(wet);
            let tx = if n > 1 {
                x as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let modulation = 1.0
                + 0.08
                    * (2.0 * std::f64::consts::PI * x as f64 / 97.0).sin()
                    * (2.0 * std::f64::consts::PI * y as f64 / 71.0).sin();
            let shallow = if wet { dist2 / (radius * radius) } else { 0.0 };
            for band in BandId::ALL {
                let mut r = if wet {
                    water_reflectance(band, shallow, tx)
                } else {
                    land_reflectance(band, modulation)
                };
                if opts.noise_sigma > 0.0 {
                    r += noise.sample(&mut rng);
                }
                let quantized = (r.max(0.0) * scale).round().clamp(0.0, 65535.0) as u16;
                dn.get_mut(&band).unwrap().push(quantized);
            }
        }
    }

    let mut sources = BTreeMap::new();
    let mut bands = BTreeMap::new();
    for band in BandId::ALL {
        sources.insert(
            band,
            BandSource {
                path: format!("{band}.tif"),
                native_resolution_m: 10,
            },
        );
        let values: Vec<f64> = dn[&band].iter().map(|d| *d as f64 / scale).collect();
        bands.insert(band, crate::scene::BandGrid::new(n, n, 10, values)?);
    }
    let manifest = SceneManifest {
        scene_id: format!("synthetic-{}", opts.seed),
        width: n,
        height: n,
        reflectance_scale: scale,
        nodata_dn: None,
        bands: sources,
    };
    let scene = Scene::from_parts(manifest, bands, vec![true; n * n])?;
    let truth = BinaryMask::from_parts(n, n, water, vec![true; n * n], MaskProvenance::external())?;
    Ok(SynthScene { scene, truth })
}

/// Writes the scene's band TIFFs, manifest and ground-truth mask into
/// `dir`. Returns the manifest path.
pub fn write_scene_dir(synth: &SynthScene, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest = synth.scene.manifest();
    let scale = manifest.reflectance_scale;
    for band in BandId::ALL {
        let grid = synth.scene.band(band);
        let dn: Vec<u16> = grid
            .values()
            .iter()
            .map(|v| (v * scale).round().clamp(0.0, 65535.0) as u16)
            .collect();
        formats::write_band_tiff(
            &dir.join(&manifest.bands[&band].path),
            &dn,
            grid.width(),
            grid.height(),
        )?;
    }
    let manifest_path = dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(manifest)
            .map_err(|e| crate::error::Error::FormatError(e.to_string()))?,
    )?;
    formats::write_mask(&dir.join("truth.png"), &synth.truth)?;
    Ok(manifest_path)
}
