//! Raster rendering: palette-mapped maps with optional title and
//! colorbar, and true-color mask overlays.
//!
//! All drawing is deterministic; identical inputs produce byte-identical
//! PNG output.

use std::path::Path;

use crate::error::{Error, Result};
use crate::font;
use crate::grid::RasterView;
use crate::palette::{Palette, Rgb};
use crate::scene::{BandId, Scene};
use crate::segment::BinaryMask;

pub const COLORBAR_HEIGHT: usize = 24;
pub const TITLE_HEIGHT: usize = 11;
const BACKGROUND: Rgb = Rgb::new(0xFF, 0xFF, 0xFF);
const INK: Rgb = Rgb::new(0x00, 0x00, 0x00);

/// Rendering controls; scale is in output pixels per map cell.
#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub scale: usize,
    pub colorbar: bool,
    pub title: Option<String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            scale: 1,
            colorbar: false,
            title: None,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(Error::FormatError("render scale must be >= 1".into()));
        }
        Ok(())
    }
}

/// RGBA pixel buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 4);
        for _ in 0..width * height {
            data.extend_from_slice(&[fill.0[0], fill.0[1], fill.0[2], 255]);
        }
        Canvas {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            let i = (y * self.width + x) * 4;
            self.data[i] = c.0[0];
            self.data[i + 1] = c.0[1];
            self.data[i + 2] = c.0[2];
            self.data[i + 3] = 255;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 4] {
        let i = (y * self.width + x) * 4;
        [
            self.data[i],
            self.data[i + 1],
            self.data[i + 2],
            self.data[i + 3],
        ]
    }

    pub fn fill_rect(&mut self, x: usize, y: usize, w: usize, h: usize, c: Rgb) {
        for yy in y..(y + h).min(self.height) {
            for xx in x..(x + w).min(self.width) {
                self.set(xx, yy, c);
            }
        }
    }

    /// Integer nearest-neighbor upscale.
    pub fn upscale(&self, factor: usize) -> Canvas {
        if factor <= 1 {
            return self.clone();
        }
        let mut out = Canvas::new(self.width * factor, self.height * factor, BACKGROUND);
        for y in 0..self.height {
            for x in 0..self.width {
                let px = self.get(x, y);
                out.fill_rect(
                    x * factor,
                    y * factor,
                    factor,
                    factor,
                    Rgb([px[0], px[1], px[2]]),
                );
            }
        }
        out
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            encoder.set_color(png::ColorType::Rgba);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder
                .write_header()
                .map_err(|e| Error::FormatError(format!("png encode: {e}")))?;
            writer
                .write_image_data(&self.data)
                .map_err(|e| Error::FormatError(format!("png encode: {e}")))?;
        }
        Ok(out)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes)?;
        Ok(())
    }
}

/// Draws `text` with its top-left corner at (x, y). Characters without
/// a glyph advance without marking pixels.
pub fn draw_text(canvas: &mut Canvas, x: usize, y: usize, text: &str, scale: usize, color: Rgb) {
    let mut cx = x;
    for c in text.chars() {
        if let Some(rows) = font::glyph(c) {
            for (ry, row) in rows.iter().enumerate() {
                for rx in 0..font::GLYPH_WIDTH {
                    if row & (1 << (font::GLYPH_WIDTH - 1 - rx)) != 0 {
                        canvas.fill_rect(cx + rx * scale, y + ry * scale, scale, scale, color);
                    }
                }
            }
        }
        cx += font::ADVANCE * scale;
    }
}

/// Formats an anchor value for tick labels: up to two decimals with
/// trailing zeros removed.
fn format_anchor(v: f64) -> String {
    let mut s = format!("{v:.2}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Renders a raster through a palette. Output is
/// (width*scale) x (title? + height*scale + colorbar?).
pub fn render_map(
    view: &dyn RasterView,
    palette: &Palette,
    opts: &RenderOptions,
) -> Result<Canvas> {
    opts.validate()?;
    let s = opts.scale;
    let (w, h) = (view.width(), view.height());
    let map_w = w * s;
    let map_h = h * s;
    let title_h = if opts.title.is_some() {
        TITLE_HEIGHT * s
    } else {
        0
    };
    let bar_h = if opts.colorbar {
        COLORBAR_HEIGHT * s
    } else {
        0
    };
    let mut canvas = Canvas::new(map_w, title_h + map_h + bar_h, BACKGROUND);

    if let Some(title) = &opts.title {
        draw_text(&mut canvas, 2 * s, 2 * s, title, s, INK);
    }

    for y in 0..h {
        for x in 0..w {
            let color = palette.color_at(view.value(x, y));
            canvas.fill_rect(x * s, title_h + y * s, s, s, color);
        }
    }

    if opts.colorbar {
        draw_colorbar(&mut canvas, palette, title_h + map_h, map_w, s);
    }
    Ok(canvas)
}

fn draw_colorbar(canvas: &mut Canvas, palette: &Palette, y0: usize, total_w: usize, s: usize) {
    let margin = 2 * s;
    if total_w <= 2 * margin + 1 {
        return;
    }
    let bar_x = margin;
    let bar_w = total_w - 2 * margin;
    let bar_y = y0 + 2 * s;
    let bar_h = 10 * s;
    let (lo, hi) = palette.domain();
    for col in 0..bar_w {
        let v = if bar_w == 1 {
            lo
        } else {
            lo + (hi - lo) * col as f64 / (bar_w - 1) as f64
        };
        let color = palette.color_at(Some(v));
        for yy in 0..bar_h {
            canvas.set(bar_x + col, bar_y + yy, color);
        }
    }
    for stop in palette.stops() {
        let t = (stop.anchor - lo) / (hi - lo);
        let col = bar_x + ((bar_w - 1) as f64 * t).round() as usize;
        canvas.fill_rect(col, bar_y + bar_h, s.max(1), 2 * s, INK);
        let label = format_anchor(stop.anchor);
        let text_w = font::text_width(&label) * s;
        let tx = col
            .saturating_sub(text_w / 2)
            .min(total_w.saturating_sub(text_w));
        draw_text(canvas, tx, bar_y + bar_h + 3 * s, &label, s, INK);
    }
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac
    }
}

fn stretched_band(scene: &Scene, id: BandId) -> Vec<u8> {
    let band = scene.band(id);
    let valid = scene.valid();
    let mut sample: Vec<f64> = band
        .values()
        .iter()
        .zip(valid.iter())
        .filter(|(_, v)| **v)
        .map(|(b, _)| *b)
        .collect();
    if sample.is_empty() {
        return vec![0; band.values().len()];
    }
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p2 = percentile(&sample, 2.0);
    let p98 = percentile(&sample, 98.0);
    let span = p98 - p2;
    band.values()
        .iter()
        .zip(valid.iter())
        .map(|(v, ok)| {
            if !ok {
                return 0;
            }
            let t = if span == 0.0 {
                0.5
            } else {
                ((v - p2) / span).clamp(0.0, 1.0)
            };
            (t * 255.0).round() as u8
        })
        .collect()
}

/// True-color composite (B04/B03/B02, per-band 2-98 percentile stretch)
/// with water pixels alpha-blended toward `water_color`.
pub fn render_mask_overlay(
    scene: &Scene,
    mask: &BinaryMask,
    water_color: Rgb,
    alpha: f64,
) -> Result<Canvas> {
    if mask.width() != scene.width() || mask.height() != scene.height() {
        return Err(Error::DimensionMismatch {
            expected_width: scene.width(),
            expected_height: scene.height(),
            actual_width: mask.width(),
            actual_height: mask.height(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::FormatError(format!("alpha {alpha} outside [0, 1]")));
    }
    let r = stretched_band(scene, BandId::B04);
    let g = stretched_band(scene, BandId::B03);
    let b = stretched_band(scene, BandId::B02);
    let (w, h) = (scene.width(), scene.height());
    let mut canvas = Canvas::new(w, h, Rgb([0, 0, 0]));
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut px = [r[i], g[i], b[i]];
            if mask.is_water(x, y) {
                for (ch, p) in px.iter_mut().enumerate() {
                    let base = *p as f64;
                    let target = water_color.0[ch] as f64;
                    *p = (base + (target - base) * alpha).round().clamp(0.0, 255.0) as u8;
                }
            }
            canvas.set(x, y, Rgb(px));
        }
    }
    Ok(canvas)
}
