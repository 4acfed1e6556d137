//! Browser demo. Synthesizes a scene in memory and exposes a few
//! interactive views as RGBA buffers sized for a `<canvas>`.

use wasm_bindgen::prelude::*;

use waterscope::eval::ConfusionMatrix;
use waterscope::index::{compute_index, IndexKind, IndexMap};
use waterscope::palette::{self, Rgb};
use waterscope::render::{render_map, render_mask_overlay, RenderOptions};
use waterscope::segment::{threshold_fixed, threshold_otsu, BinaryMask, DEFAULT_HISTOGRAM_BINS};
use waterscope::stats::{homogeneity_fractions, local_sigma, masked_stats};
use waterscope::synth::{generate, SynthOptions, SynthScene};

fn err(e: waterscope::Error) -> JsError {
    JsError::new(&e.to_string())
}

const OVERLAY_BLUE: Rgb = Rgb([0x16, 0x6A, 0xCC]);

#[wasm_bindgen]
pub struct DemoScene {
    synth: SynthScene,
}

#[wasm_bindgen]
impl DemoScene {
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, seed: u32) -> Result<DemoScene, JsError> {
        let opts = SynthOptions {
            size,
            seed: seed as u64,
            ..Default::default()
        };
        Ok(DemoScene {
            synth: generate(&opts).map_err(err)?,
        })
    }

    pub fn size(&self) -> usize {
        self.synth.scene.width()
    }

    fn index(&self, kind: &str) -> Result<IndexMap, JsError> {
        let kind: IndexKind = kind.parse().map_err(err)?;
        compute_index(&self.synth.scene, kind, None).map_err(err)
    }

    fn water_mask(&self, kind: &str, threshold: f64) -> Result<BinaryMask, JsError> {
        threshold_fixed(&self.index(kind)?, threshold).map_err(err)
    }

    /// Contrast-stretched true-color composite of the scene.
    pub fn true_color(&self) -> Result<Vec<u8>, JsError> {
        let canvas = render_mask_overlay(&self.synth.scene, &self.synth.truth, OVERLAY_BLUE, 0.0)
            .map_err(err)?;
        Ok(canvas.data().to_vec())
    }

    /// Colormapped index values.
    pub fn index_view(&self, kind: &str) -> Result<Vec<u8>, JsError> {
        let map = self.index(kind)?;
        let pal = palette::for_index(map.kind);
        let canvas = render_map(&map, &pal, &RenderOptions::default()).map_err(err)?;
        Ok(canvas.data().to_vec())
    }

    pub fn index_summary(&self, kind: &str) -> Result<String, JsError> {
        let map = self.index(kind)?;
        let stats = masked_stats(&map, None).map_err(err)?;
        Ok(format!(
            "{}: {} over {} px, range [{:.2}, {:.2}]",
            map.kind,
            stats.summary(),
            stats.count,
            stats.min,
            stats.max
        ))
    }

    /// Water pixels above `threshold` blended over the composite.
    pub fn threshold_view(&self, kind: &str, threshold: f64) -> Result<Vec<u8>, JsError> {
        let mask = self.water_mask(kind, threshold)?;
        let canvas =
            render_mask_overlay(&self.synth.scene, &mask, OVERLAY_BLUE, 0.65).map_err(err)?;
        Ok(canvas.data().to_vec())
    }

    /// The automatically chosen histogram split for this index.
    pub fn otsu_threshold(&self, kind: &str) -> Result<f64, JsError> {
        let (_, t) = threshold_otsu(&self.index(kind)?, DEFAULT_HISTOGRAM_BINS).map_err(err)?;
        Ok(t)
    }

    pub fn threshold_summary(&self, kind: &str, threshold: f64) -> Result<String, JsError> {
        let mask = self.water_mask(kind, threshold)?;
        let fraction = mask.water_fraction().map_err(err)?;
        let iou = ConfusionMatrix::from_masks(&mask, &self.synth.truth)
            .map_err(err)?
            .metrics()
            .map_err(err)?
            .iou;
        let iou = match iou {
            Some(v) => format!("{:.1}%", v * 100.0),
            None => "n/a".into(),
        };
        Ok(format!(
            "t = {threshold:.3}: water {:.1}% of scene, IoU vs truth {iou}",
            fraction * 100.0
        ))
    }

    /// Local variability of the index inside the thresholded water area.
    pub fn sigma_view(
        &self,
        kind: &str,
        threshold: f64,
        window: usize,
    ) -> Result<Vec<u8>, JsError> {
        let map = self.index(kind)?;
        let mask = self.water_mask(kind, threshold)?;
        let sigma = local_sigma(&map, &mask, window).map_err(err)?;
        let pal = palette::builtin(palette::PaletteKind::Sigma);
        let canvas = render_map(&sigma, &pal, &RenderOptions::default()).map_err(err)?;
        Ok(canvas.data().to_vec())
    }

    pub fn sigma_summary(
        &self,
        kind: &str,
        threshold: f64,
        window: usize,
    ) -> Result<String, JsError> {
        let map = self.index(kind)?;
        let mask = self.water_mask(kind, threshold)?;
        let sigma = local_sigma(&map, &mask, window).map_err(err)?;
        let f = homogeneity_fractions(&sigma).map_err(err)?;
        Ok(format!(
            "window {window}: stable {:.1}%, transitional {:.1}%, variable {:.1}% of {} water px",
            f.stable * 100.0,
            f.transitional * 100.0,
            f.variable * 100.0,
            f.count
        ))
    }

    /// One RGBA row sampling the palette across its domain, for legends.
    pub fn palette_strip(&self, kind: &str, width: usize) -> Result<Vec<u8>, JsError> {
        let kind: IndexKind = kind.parse().map_err(err)?;
        let pal = palette::for_index(kind);
        Ok(strip(&pal, width))
    }

    pub fn sigma_palette_strip(&self, width: usize) -> Vec<u8> {
        strip(&palette::builtin(palette::PaletteKind::Sigma), width)
    }

    /// [lo, hi] of the palette domain for legend labels.
    pub fn palette_domain(&self, kind: &str) -> Result<Vec<f64>, JsError> {
        let kind: IndexKind = kind.parse().map_err(err)?;
        let (lo, hi) = palette::for_index(kind).domain();
        Ok(vec![lo, hi])
    }
}

fn strip(pal: &palette::Palette, width: usize) -> Vec<u8> {
    let (lo, hi) = pal.domain();
    let mut out = Vec::with_capacity(width * 4);
    for i in 0..width {
        let v = if width > 1 {
            lo + (hi - lo) * i as f64 / (width - 1) as f64
        } else {
            lo
        };
        let Rgb([r, g, b]) = pal.color_at(Some(v));
        out.extend_from_slice(&[r, g, b, 0xFF]);
    }
    out
}
