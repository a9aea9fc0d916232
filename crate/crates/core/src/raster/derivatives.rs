use super::{GrayImage, ScalarField};
use crate::error::{Error, Result};

/// First and second partial derivatives of an image, from central differences.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub ix: ScalarField,
    pub iy: ScalarField,
    pub ixx: ScalarField,
    pub iyy: ScalarField,
    pub ixy: ScalarField,
}

/// Central-difference derivatives with a one-pixel invalid margin.
///
/// The stencils pair opposite samples before combining them, so a quarter
/// turn of the image permutes and negates the outputs exactly.
pub fn derivatives(img: &GrayImage) -> Result<Derivatives> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::Dimension(format!(
            "derivatives need at least 3x3 pixels, got {w}x{h}"
        )));
    }
    let at = |x: usize, y: usize| img.get(x, y);
    Ok(Derivatives {
        ix: ScalarField::from_fn(w, h, 1, |x, y| (at(x + 1, y) - at(x - 1, y)) * 0.5),
        iy: ScalarField::from_fn(w, h, 1, |x, y| (at(x, y + 1) - at(x, y - 1)) * 0.5),
        ixx: ScalarField::from_fn(w, h, 1, |x, y| (at(x + 1, y) + at(x - 1, y)) - 2.0 * at(x, y)),
        iyy: ScalarField::from_fn(w, h, 1, |x, y| (at(x, y + 1) + at(x, y - 1)) - 2.0 * at(x, y)),
        ixy: ScalarField::from_fn(w, h, 1, |x, y| {
            let main = at(x + 1, y + 1) + at(x - 1, y - 1);
            let anti = at(x + 1, y - 1) + at(x - 1, y + 1);
            (main - anti) * 0.25
        }),
    })
}

/// [`derivatives`] after an optional Gaussian pre-smooth. `sigma <= 0`
/// disables smoothing.
pub fn derivatives_smoothed(img: &GrayImage, sigma: f64) -> Result<Derivatives> {
    if sigma > 0.0 {
        derivatives(&gaussian_blur(img, sigma)?)
    } else {
        derivatives(img)
    }
}

/// Separable Gaussian blur with replicated borders. The kernel is truncated
/// at `ceil(3 sigma)`.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma must be positive and finite, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut weights: Vec<f64> = (0..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    weights.iter_mut().for_each(|w| *w /= total);

    let (w, h) = (img.width() as isize, img.height() as isize);
    let clamp = |v: isize, n: isize| v.clamp(0, n - 1) as usize;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                let read = |d: isize| {
                    if horizontal {
                        src[y as usize * w as usize + clamp(x + d, w)]
                    } else {
                        src[clamp(y + d, h) * w as usize + x as usize]
                    }
                };
                let mut acc = weights[0] * read(0);
                for k in 1..=radius {
                    acc += weights[k as usize] * (read(-k) + read(k));
                }
                out[y as usize * w as usize + x as usize] = acc;
            }
        }
        out
    };
    let horizontal = pass(img.data(), true);
    GrayImage::new(img.width(), img.height(), pass(&horizontal, false))
}
