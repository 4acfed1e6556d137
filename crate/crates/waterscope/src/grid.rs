//! Dense 2D value storage shared by index maps and derived statistics.

use crate::error::{Error, Result};

/// A width x height grid of f64 samples with an explicit defined mask.
///
/// Undefined cells hold NaN in `values`; `defined` is the authoritative
/// membership test so callers never need to sniff for NaN themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    defined: Vec<bool>,
}

impl ValueGrid {
    pub fn new_undefined(width: usize, height: usize) -> Self {
        ValueGrid {
            width,
            height,
            values: vec![f64::NAN; width * height],
            defined: vec![false; width * height],
        }
    }

    /// Builds a grid from raw buffers. NaN values are normalized to
    /// undefined regardless of the passed mask.
    pub fn from_parts(
        width: usize,
        height: usize,
        mut values: Vec<f64>,
        mut defined: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != width * height || defined.len() != width * height {
            return Err(Error::FormatError(format!(
                "grid buffer length {} does not match {}x{}",
                values.len(),
                width,
                height
            )));
        }
        for (v, d) in values.iter_mut().zip(defined.iter_mut()) {
            if v.is_nan() {
                *d = false;
            }
            if !*d {
                *v = f64::NAN;
            }
        }
        Ok(ValueGrid {
            width,
            height,
            values,
            defined,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Value at (x, y), or None when the cell is undefined.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Option<f64> {
        let i = self.idx(x, y);
        if self.defined[i] {
            Some(self.values[i])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_defined(&self, x: usize, y: usize) -> bool {
        self.defined[self.idx(x, y)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = self.idx(x, y);
        if value.is_nan() {
            self.values[i] = f64::NAN;
            self.defined[i] = false;
        } else {
            self.values[i] = value;
            self.defined[i] = true;
        }
    }

    pub fn set_undefined(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        self.values[i] = f64::NAN;
        self.defined[i] = false;
    }

    pub fn defined_count(&self) -> usize {
        self.defined.iter().filter(|d| **d).count()
    }

    pub fn iter_defined(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.defined
            .iter()
            .enumerate()
            .filter(|(_, d)| **d)
            .map(move |(i, _)| (i % w, i / w, self.values[i]))
    }

    pub fn same_dims(&self, other: &ValueGrid) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                actual_width: other.width,
                actual_height: other.height,
            });
        }
        Ok(())
    }
}

/// Anything renderable as a single-channel raster with missing cells.
pub trait RasterView {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn value(&self, x: usize, y: usize) -> Option<f64>;
}

impl RasterView for ValueGrid {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn value(&self, x: usize, y: usize) -> Option<f64> {
        self.at(x, y)
    }
}

/// Runs `body` once per row, in parallel when the `parallel` feature is
/// enabled. Each row receives its own mutable slice of the output buffers.
pub(crate) fn compute_rows<F>(width: usize, values: &mut [f64], defined: &mut [bool], body: F)
where
    F: Fn(usize, &mut [f64], &mut [bool]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values
            .par_chunks_mut(width)
            .zip(defined.par_chunks_mut(width))
            .enumerate()
            .for_each(|(y, (vrow, drow))| body(y, vrow, drow));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (y, (vrow, drow)) in values
            .chunks_mut(width)
            .zip(defined.chunks_mut(width))
            .enumerate()
        {
            body(y, vrow, drow);
        }
    }
}
