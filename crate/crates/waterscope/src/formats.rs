//! File formats: band TIFFs, float map TIFFs with JSON sidecars, mask
//! PNGs, probability maps, patch lists and depth profiles.
//!
//! Float rasters use NaN as the nodata sentinel; every raster writer
//! has a matching reader that reconstructs the in-memory type exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ProbabilityMap;
use crate::grid::ValueGrid;
use crate::index::{IndexKind, IndexMap};
use crate::scene::{PatchSpec, SampledPatches};
use crate::segment::{BinaryMask, MaskProvenance};
use crate::stats::{DepthProfile, SigmaMap};

/// Sidecar convention: `<raster>.json` next to the raster file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn band_error(path: &Path, detail: impl ToString) -> Error {
    Error::BandFile {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    }
}

/// Reads a single-channel 16-bit band TIFF.
pub fn read_band_tiff(path: &Path) -> Result<(Vec<u16>, usize, usize)> {
    let file = File::open(path).map_err(|e| band_error(path, e))?;
    let mut dec =
        tiff::decoder::Decoder::new(BufReader::new(file)).map_err(|e| band_error(path, e))?;
    let (w, h) = dec.dimensions().map_err(|e| band_error(path, e))?;
    match dec.read_image().map_err(|e| band_error(path, e))? {
        tiff::decoder::DecodingResult::U16(data) => {
            if data.len() != (w as usize) * (h as usize) {
                return Err(band_error(path, "unexpected sample count"));
            }
            Ok((data, w as usize, h as usize))
        }
        _ => Err(band_error(path, "expected 16-bit unsigned samples")),
    }
}

/// Writes a single-channel 16-bit band TIFF (uncompressed, stripped).
pub fn write_band_tiff(path: &Path, data: &[u16], width: usize, height: usize) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::FormatError(format!(
            "band buffer length {} does not match {width}x{height}",
            data.len()
        )));
    }
    let file = File::create(path)?;
    let mut enc =
        tiff::encoder::TiffEncoder::new(BufWriter::new(file)).map_err(|e| band_error(path, e))?;
    enc.write_image::<tiff::encoder::colortype::Gray16>(width as u32, height as u32, data)
        .map_err(|e| band_error(path, e))?;
    Ok(())
}

fn write_grid_tiff(path: &Path, grid: &ValueGrid) -> Result<()> {
    let data: Vec<f32> = grid.values().iter().map(|v| *v as f32).collect();
    let file = File::create(path)?;
    let mut enc = tiff::encoder::TiffEncoder::new(BufWriter::new(file))
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    enc.write_image::<tiff::encoder::colortype::Gray32Float>(
        grid.width() as u32,
        grid.height() as u32,
        &data,
    )
    .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn read_grid_tiff(path: &Path) -> Result<ValueGrid> {
    let file = File::open(path)?;
    let mut dec = tiff::decoder::Decoder::new(BufReader::new(file))
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    let (w, h) = dec
        .dimensions()
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    match dec
        .read_image()
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?
    {
        tiff::decoder::DecodingResult::F32(data) => {
            if data.len() != (w as usize) * (h as usize) {
                return Err(Error::FormatError(format!(
                    "{}: unexpected sample count",
                    path.display()
                )));
            }
            let values: Vec<f64> = data.iter().map(|v| *v as f64).collect();
            let defined = values.iter().map(|v| !v.is_nan()).collect();
            ValueGrid::from_parts(w as usize, h as usize, values, defined)
        }
        _ => Err(Error::FormatError(format!(
            "{}: expected 32-bit float samples",
            path.display()
        ))),
    }
}

/// Statistics block recorded in raster sidecars.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SidecarStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sigma: f64,
}

fn stats_of(grid: &ValueGrid) -> Option<SidecarStats> {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (_, _, v) in grid.iter_defined() {
        n += 1;
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    if n == 0 {
        return None;
    }
    let mean = sum / n as f64;
    let mut acc = 0.0;
    for (_, _, v) in grid.iter_defined() {
        acc += (v - mean) * (v - mean);
    }
    Some(SidecarStats {
        min,
        max,
        mean,
        sigma: (acc / n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexSidecar {
    kind: IndexKind,
    width: usize,
    height: usize,
    nodata: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<SidecarStats>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    file.write_all(b"\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))
}

/// Writes an index map as float TIFF plus `<path>.json` sidecar.
pub fn write_index_map(path: &Path, map: &IndexMap) -> Result<()> {
    write_grid_tiff(path, &map.grid)?;
    let sidecar = IndexSidecar {
        kind: map.kind,
        width: map.grid.width(),
        height: map.grid.height(),
        nodata: "nan".into(),
        stats: stats_of(&map.grid),
    };
    write_json(&sidecar_path(path), &sidecar)
}

/// Reads an index map written by [`write_index_map`]; the sidecar
/// supplies the kind.
pub fn read_index_map(path: &Path) -> Result<IndexMap> {
    let grid = read_grid_tiff(path)?;
    let sidecar: IndexSidecar = read_json(&sidecar_path(path))?;
    if sidecar.width != grid.width() || sidecar.height != grid.height() {
        return Err(Error::FormatError(format!(
            "{}: sidecar dimensions {}x{} disagree with raster {}x{}",
            path.display(),
            sidecar.width,
            sidecar.height,
            grid.width(),
            grid.height()
        )));
    }
    Ok(IndexMap {
        kind: sidecar.kind,
        grid,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SigmaSidecar {
    source_kind: IndexKind,
    window: usize,
    width: usize,
    height: usize,
    nodata: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<SidecarStats>,
}

pub fn write_sigma_map(path: &Path, map: &SigmaMap) -> Result<()> {
    write_grid_tiff(path, &map.grid)?;
    let sidecar = SigmaSidecar {
        source_kind: map.source_kind,
        window: map.window,
        width: map.grid.width(),
        height: map.grid.height(),
        nodata: "nan".into(),
        stats: stats_of(&map.grid),
    };
    write_json(&sidecar_path(path), &sidecar)
}

pub fn read_sigma_map(path: &Path) -> Result<SigmaMap> {
    let grid = read_grid_tiff(path)?;
    let sidecar: SigmaSidecar = read_json(&sidecar_path(path))?;
    if sidecar.width != grid.width() || sidecar.height != grid.height() {
        return Err(Error::FormatError(format!(
            "{}: sidecar dimensions disagree with raster",
            path.display()
        )));
    }
    Ok(SigmaMap {
        source_kind: sidecar.source_kind,
        window: sidecar.window,
        grid,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MaskSidecar {
    provenance: MaskProvenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    water_fraction: Option<f64>,
    width: usize,
    height: usize,
    invalid: usize,
}

/// Reads an 8-bit grayscale PNG.
pub fn read_gray8_png(path: &Path) -> Result<(Vec<u8>, usize, usize)> {
    let file =
        File::open(path).map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::FormatError(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::FormatError(format!(
            "{}: expected 8-bit grayscale",
            path.display()
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((buf, info.width as usize, info.height as usize))
}

fn write_gray8_png(path: &Path, data: &[u8], width: usize, height: usize) -> Result<()> {
    let file = File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    writer
        .write_image_data(data)
        .map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Writes a mask as 8-bit PNG (0 = land, 255 = water) plus sidecar.
/// Invalid pixels are written as land; their count goes in the sidecar.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let data: Vec<u8> = (0..mask.water().len())
        .map(|i| {
            if mask.valid()[i] && mask.water()[i] {
                255
            } else {
                0
            }
        })
        .collect();
    write_gray8_png(path, &data, mask.width(), mask.height())?;
    let sidecar = MaskSidecar {
        provenance: *mask.provenance(),
        water_fraction: mask.water_fraction().ok(),
        width: mask.width(),
        height: mask.height(),
        invalid: mask.valid().iter().filter(|v| !**v).count(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

/// Reads a probability map from a 32-bit float TIFF. NaN samples are
/// invalid; finite samples must lie in [0, 1].
pub fn read_probability_tiff(path: &Path) -> Result<ProbabilityMap> {
    let grid = read_grid_tiff(path)?;
    ProbabilityMap::from_parts(
        grid.width(),
        grid.height(),
        grid.values().to_vec(),
        grid.defined().to_vec(),
    )
}

pub fn write_probability_tiff(path: &Path, map: &ProbabilityMap) -> Result<()> {
    let values: Vec<f64> = map
        .probs()
        .iter()
        .zip(map.valid().iter())
        .map(|(p, v)| if *v { *p } else { f64::NAN })
        .collect();
    let grid = ValueGrid::from_parts(map.width(), map.height(), values, map.valid().to_vec())?;
    write_grid_tiff(path, &grid)
}

pub fn write_patches(path: &Path, sampled: &SampledPatches) -> Result<()> {
    write_json(path, sampled)
}

pub fn read_patches(path: &Path) -> Result<SampledPatches> {
    read_json(path)
}

pub fn read_patch_spec(path: &Path) -> Result<PatchSpec> {
    read_json(path)
}

/// Writes profile pairs as CSV with a `depth,value` header.
pub fn write_profile_csv(path: &Path, profile: &DepthProfile) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "depth,value")?;
    for (depth, value) in &profile.pairs {
        writeln!(file, "{depth},{value}")?;
    }
    Ok(())
}

/// Writes the binned profile as JSON.
pub fn write_profile_bins(path: &Path, profile: &DepthProfile) -> Result<()> {
    write_json(path, profile)
}
