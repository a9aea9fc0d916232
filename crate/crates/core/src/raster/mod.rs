//! Grayscale images, derivative fields and circular neighborhood sampling.
//!
//! Images are stored row-major as `f64` intensities. Derived quantities
//! (derivatives, gradient magnitudes, affine invariants) live in a
//! [`ScalarField`], which carries a border band where the value is undefined.

mod derivatives;
mod io;
mod sampling;

pub use derivatives::{derivatives, derivatives_smoothed, gaussian_blur, Derivatives};
pub use io::{load_gray, read_gray, to_grayscale, write_pgm, ChannelRaster, Samples};
pub use sampling::{sample_circle, NeighborhoodSpec, SamplingKernel, Tap, MAX_POINTS};

use crate::error::{Error, Result};

/// Read access shared by [`GrayImage`] and [`ScalarField`].
pub trait Raster {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Width of the border band where values are undefined.
    fn margin(&self) -> usize;
    /// Value at `(x, y)` without margin checks. Panics outside the image.
    fn raw(&self, x: usize, y: usize) -> f64;
}

/// A single-channel image with real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite intensity at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Rotates the picture a quarter turn counterclockwise as displayed
    /// (y axis pointing down).
    pub fn rotate_ccw(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..w {
            for x in 0..h {
                data.push(self.get(w - 1 - y, x));
            }
        }
        GrayImage {
            width: h,
            height: w,
            data,
        }
    }

    /// Pointwise `a * I + b`.
    pub fn affine_intensity(&self, a: f64, b: f64) -> Result<GrayImage> {
        GrayImage::new(self.width, self.height, self.data.iter().map(|v| a * v + b).collect())
    }
}

impl Raster for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn margin(&self) -> usize {
        0
    }
    fn raw(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// A per-pixel real-valued map aligned with a source image.
///
/// Pixels closer than `valid_margin` to any border hold no value; they are
/// stored as NaN and reported as `None` by [`ScalarField::get`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    valid_margin: usize,
    data: Vec<f64>,
}

impl ScalarField {
    /// Builds a field by evaluating `f(x, y)` on the valid region only.
    pub fn from_fn(width: usize, height: usize, valid_margin: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![f64::NAN; width * height];
        if width > 2 * valid_margin && height > 2 * valid_margin {
            for y in valid_margin..height - valid_margin {
                for x in valid_margin..width - valid_margin {
                    data[y * width + x] = f(x, y);
                }
            }
        }
        ScalarField {
            width,
            height,
            valid_margin,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn valid_margin(&self) -> usize {
        self.valid_margin
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        let m = self.valid_margin;
        x >= m && y >= m && x + m < self.width && y + m < self.height
    }

    /// Value at `(x, y)`, or `None` inside the margin or outside the field.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.is_valid(x, y).then(|| self.data[y * self.width + x])
    }

    /// Iterates over `(x, y, value)` for every valid pixel in row-major order.
    pub fn valid_values(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let m = self.valid_margin;
        let (w, h) = (self.width, self.height);
        let ys = if h > 2 * m { m..h - m } else { 0..0 };
        ys.flat_map(move |y| {
            let xs = if w > 2 * m { m..w - m } else { 0..0 };
            xs.map(move |x| (x, y, self.data[y * w + x]))
        })
    }

    pub fn valid_count(&self) -> usize {
        let m = self.valid_margin;
        self.width.saturating_sub(2 * m) * self.height.saturating_sub(2 * m)
    }

    /// Minimum and maximum over the valid region.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.valid_values().fold(None, |acc, (_, _, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    pub(crate) fn ensure_same_shape(&self, other: &ScalarField, what: &str) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Dimension(format!(
                "{what}: {}x{} field combined with {}x{} field",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Applies `f` pointwise across fields of identical shape. The result
    /// inherits the widest margin of the inputs.
    pub(crate) fn zip_map(fields: &[&ScalarField], what: &str, f: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
        let first = fields
            .first()
            .ok_or_else(|| Error::Invariant(format!("{what}: no input fields")))?;
        for other in &fields[1..] {
            first.ensure_same_shape(other, what)?;
        }
        let margin = fields.iter().map(|f| f.valid_margin).max().unwrap_or(0);
        let w = first.width;
        let mut args = vec![0.0; fields.len()];
        Ok(ScalarField::from_fn(first.width, first.height, margin, |x, y| {
            for (slot, field) in args.iter_mut().zip(fields) {
                *slot = field.data[y * w + x];
            }
            f(&args)
        }))
    }
}

impl Raster for ScalarField {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn margin(&self) -> usize {
        self.valid_margin
    }
    fn raw(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}
