//! Thematic color palettes.
//!
//! Each palette is a piecewise-linear gradient over a fixed value
//! domain, plus dedicated colors for out-of-range and undefined pixels.
//! Out-of-range values clamp to the nearest endpoint color.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::IndexKind;

/// 8-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb([r, g, b])
    }

    pub fn components(&self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }

    /// Relative luminance of the raw 8-bit components.
    pub fn luminance(&self) -> f64 {
        luminance(self.components())
    }
}

pub fn luminance(c: [f64; 3]) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::InvalidPalette(format!("bad color {s:?}")));
        }
        let r = u8::from_str_radix(&hex[0..2], 16).unwrap();
        let g = u8::from_str_radix(&hex[2..4], 16).unwrap();
        let b = u8::from_str_radix(&hex[4..6], 16).unwrap();
        Ok(Rgb([r, g, b]))
    }
}

impl Serialize for Rgb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Anchor value and color for one gradient stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaletteStop {
    pub anchor: f64,
    pub color: Rgb,
}

/// A named gradient with clamping and an undefined color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PaletteFile", into = "PaletteFile")]
pub struct Palette {
    name: String,
    domain: (f64, f64),
    stops: Vec<PaletteStop>,
    under: Rgb,
    over: Rgb,
    undefined: Rgb,
}

/// On-disk palette schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PaletteFile {
    name: String,
    domain: [f64; 2],
    stops: Vec<PaletteStop>,
    under: Rgb,
    over: Rgb,
    undefined: Rgb,
}

impl TryFrom<PaletteFile> for Palette {
    type Error = Error;

    fn try_from(f: PaletteFile) -> Result<Self> {
        Palette::new(
            f.name,
            (f.domain[0], f.domain[1]),
            f.stops,
            f.under,
            f.over,
            f.undefined,
        )
    }
}

impl From<Palette> for PaletteFile {
    fn from(p: Palette) -> Self {
        PaletteFile {
            name: p.name,
            domain: [p.domain.0, p.domain.1],
            stops: p.stops,
            under: p.under,
            over: p.over,
            undefined: p.undefined,
        }
    }
}

pub const UNDEFINED_GRAY: Rgb = Rgb::new(0x80, 0x80, 0x80);

impl Palette {
    pub fn new(
        name: String,
        domain: (f64, f64),
        stops: Vec<PaletteStop>,
        under: Rgb,
        over: Rgb,
        undefined: Rgb,
    ) -> Result<Self> {
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 < domain.1) {
            return Err(Error::InvalidPalette(format!(
                "domain [{}, {}] must be a finite increasing interval",
                domain.0, domain.1
            )));
        }
        if stops.len() < 2 {
            return Err(Error::InvalidPalette("need at least two stops".into()));
        }
        for pair in stops.windows(2) {
            let (a, b) = (pair[0].anchor, pair[1].anchor);
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(Error::InvalidPalette(format!(
                    "stop anchors must strictly increase ({a} then {b})"
                )));
            }
        }
        if stops.first().unwrap().anchor != domain.0 || stops.last().unwrap().anchor != domain.1 {
            return Err(Error::InvalidPalette(
                "first and last stops must sit on the domain endpoints".into(),
            ));
        }
        Ok(Palette {
            name,
            domain,
            stops,
            under,
            over,
            undefined,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn stops(&self) -> &[PaletteStop] {
        &self.stops
    }

    pub fn under(&self) -> Rgb {
        self.under
    }

    pub fn over(&self) -> Rgb {
        self.over
    }

    pub fn undefined(&self) -> Rgb {
        self.undefined
    }

    /// Interpolated color as unrounded components. Values outside the
    /// domain return the under / over colors.
    pub fn components_at(&self, value: f64) -> [f64; 3] {
        if value < self.domain.0 {
            return self.under.components();
        }
        if value > self.domain.1 {
            return self.over.components();
        }
        let mut upper = 1;
        while upper < self.stops.len() - 1 && self.stops[upper].anchor < value {
            upper += 1;
        }
        let a = &self.stops[upper - 1];
        let b = &self.stops[upper];
        if value <= a.anchor {
            return a.color.components();
        }
        let t = (value - a.anchor) / (b.anchor - a.anchor);
        let ca = a.color.components();
        let cb = b.color.components();
        [
            ca[0] + (cb[0] - ca[0]) * t,
            ca[1] + (cb[1] - ca[1]) * t,
            ca[2] + (cb[2] - ca[2]) * t,
        ]
    }

    /// Final 8-bit color for a possibly missing value.
    pub fn color_at(&self, value: Option<f64>) -> Rgb {
        match value {
            None => self.undefined,
            Some(v) if v.is_nan() => self.undefined,
            Some(v) => {
                let c = self.components_at(v);
                Rgb([
                    c[0].round().clamp(0.0, 255.0) as u8,
                    c[1].round().clamp(0.0, 255.0) as u8,
                    c[2].round().clamp(0.0, 255.0) as u8,
                ])
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("palette serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidPalette(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Identifies one of the built-in palettes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaletteKind {
    Index(IndexKind),
    Sigma,
    Mask,
}

impl PaletteKind {
    pub const ALL: [PaletteKind; 8] = [
        PaletteKind::Index(IndexKind::Ndwi),
        PaletteKind::Index(IndexKind::Mndwi),
        PaletteKind::Index(IndexKind::Turbidity),
        PaletteKind::Index(IndexKind::Ndci),
        PaletteKind::Index(IndexKind::Ndosi),
        PaletteKind::Index(IndexKind::RelBathymetry),
        PaletteKind::Sigma,
        PaletteKind::Mask,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PaletteKind::Index(kind) => kind.as_str(),
            PaletteKind::Sigma => "sigma",
            PaletteKind::Mask => "mask",
        }
    }
}

impl fmt::Display for PaletteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PaletteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma" | "variance" => Ok(PaletteKind::Sigma),
            "mask" => Ok(PaletteKind::Mask),
            other => other
                .parse::<IndexKind>()
                .map(PaletteKind::Index)
                .map_err(|_| Error::UnknownPaletteKind(s.to_string())),
        }
    }
}

fn stops(list: &[(f64, u32)]) -> Vec<PaletteStop> {
    list.iter()
        .map(|(anchor, hex)| PaletteStop {
            anchor: *anchor,
            color: Rgb([(hex >> 16) as u8, (hex >> 8) as u8, *hex as u8]),
        })
        .collect()
}

/// Returns the standard palette for a map kind. Under and over colors
/// equal the endpoint stop colors, so out-of-domain values clamp.
pub fn builtin(kind: PaletteKind) -> Palette {
    let (name, domain, stop_list): (&str, (f64, f64), Vec<PaletteStop>) = match kind {
        PaletteKind::Index(IndexKind::Ndwi) => (
            "ndwi",
            (-1.0, 1.0),
            stops(&[(-1.0, 0x8C7355), (0.0, 0xD9E8D0), (1.0, 0x08306B)]),
        ),
        PaletteKind::Index(IndexKind::Mndwi) => (
            "mndwi",
            (-1.0, 1.0),
            stops(&[(-1.0, 0x8C7355), (0.0, 0xD9E8D0), (1.0, 0x08306B)]),
        ),
        PaletteKind::Index(IndexKind::Turbidity) => (
            "turbidity",
            (0.0, 6.0),
            stops(&[(0.0, 0xA6CEE3), (3.0, 0xC49A6C), (6.0, 0x5C3A1E)]),
        ),
        PaletteKind::Index(IndexKind::Ndci) => (
            "ndci",
            (-1.0, 1.0),
            stops(&[
                (-1.0, 0x1A9850),
                (0.15, 0xFEE08B),
                (0.30, 0xFDAE61),
                (1.0, 0xD73027),
            ]),
        ),
        PaletteKind::Index(IndexKind::Ndosi) => (
            "ndosi",
            (-1.0, 1.0),
            stops(&[(-1.0, 0x2166AC), (0.20, 0xB2182B), (1.0, 0x67001F)]),
        ),
        PaletteKind::Index(IndexKind::RelBathymetry) => (
            "rel_bathymetry",
            (0.0, 1.0),
            stops(&[(0.0, 0xC6DBEF), (1.0, 0x08306B)]),
        ),
        PaletteKind::Sigma => (
            "sigma",
            (0.0, 0.5),
            stops(&[
                (0.0, 0x2166AC),
                (0.15, 0x66BD63),
                (0.25, 0xFEE08B),
                (0.35, 0xF46D43),
                (0.5, 0xA50026),
            ]),
        ),
        PaletteKind::Mask => (
            "mask",
            (0.0, 1.0),
            stops(&[(0.0, 0x000000), (1.0, 0xFFFFFF)]),
        ),
    };
    let under = stop_list.first().unwrap().color;
    let over = stop_list.last().unwrap().color;
    Palette::new(
        name.to_string(),
        domain,
        stop_list,
        under,
        over,
        UNDEFINED_GRAY,
    )
    .expect("builtin palette is valid")
}

/// Builtin palette for an index kind.
pub fn for_index(kind: IndexKind) -> Palette {
    builtin(PaletteKind::Index(kind))
}
