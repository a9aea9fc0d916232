//! Euclidean gradient magnitude and the second-order affine differential
//! invariants built from image derivatives.
//!
//! With `H = Ixx Iyy - Ixy^2` and `J = Ixx Iy^2 - 2 Ix Iy Ixy + Ix^2 Iyy`,
//! the affine gradient is `|H / J|`. Descriptors use the bounded form
//! `sqrt(H^2 / (J^2 + 1))`, which is finite everywhere.

use crate::error::Result;
use crate::raster::{derivatives_smoothed, Derivatives, GrayImage, ScalarField};

/// Gradient-type fields derived from one image.
#[derive(Debug, Clone)]
pub struct GradientFields {
    /// Euclidean gradient magnitude.
    pub eg: ScalarField,
    pub h: ScalarField,
    pub j: ScalarField,
    /// Zero-denominator-safe affine gradient magnitude.
    pub affg_prime: ScalarField,
}

impl GradientFields {
    pub fn from_derivatives(d: &Derivatives) -> Result<Self> {
        let eg = euclidean_gradient(&d.ix, &d.iy)?;
        let (h, j) = affine_invariants(&d.ix, &d.iy, &d.ixx, &d.iyy, &d.ixy)?;
        let affg_prime = affine_gradient_prime(&h, &j)?;
        Ok(GradientFields { eg, h, j, affg_prime })
    }

    /// Derivatives (optionally Gaussian pre-smoothed) followed by every
    /// gradient field.
    pub fn compute(img: &GrayImage, smoothing_sigma: f64) -> Result<Self> {
        GradientFields::from_derivatives(&derivatives_smoothed(img, smoothing_sigma)?)
    }
}

/// Pointwise `sqrt(Ix^2 + Iy^2)`.
pub fn euclidean_gradient(ix: &ScalarField, iy: &ScalarField) -> Result<ScalarField> {
    ScalarField::zip_map(&[ix, iy], "euclidean_gradient", |v| (v[0] * v[0] + v[1] * v[1]).sqrt())
}

/// Pointwise `(H, J)`.
pub fn affine_invariants(
    ix: &ScalarField,
    iy: &ScalarField,
    ixx: &ScalarField,
    iyy: &ScalarField,
    ixy: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    let inputs = [ix, iy, ixx, iyy, ixy];
    let h = ScalarField::zip_map(&inputs, "affine_invariants", |v| h_at(v[2], v[3], v[4]))?;
    let j = ScalarField::zip_map(&inputs, "affine_invariants", |v| j_at(v[0], v[1], v[2], v[3], v[4]))?;
    Ok((h, j))
}

/// Pointwise `sqrt(H^2 / (J^2 + 1))`.
pub fn affine_gradient_prime(h: &ScalarField, j: &ScalarField) -> Result<ScalarField> {
    ScalarField::zip_map(&[h, j], "affine_gradient_prime", |v| affg_prime_at(v[0], v[1]))
}

/// The raw ratio `|H / J|`, infinite wherever `J = 0`. Diagnostic only.
pub fn affine_gradient_ratio(h: &ScalarField, j: &ScalarField) -> Result<ScalarField> {
    ScalarField::zip_map(&[h, j], "affine_gradient_ratio", |v| {
        if v[1] == 0.0 {
            f64::INFINITY
        } else {
            (v[0] / v[1]).abs()
        }
    })
}

pub(crate) fn h_at(ixx: f64, iyy: f64, ixy: f64) -> f64 {
    ixx * iyy - ixy * ixy
}

// Terms are grouped so that swapping x and y (with sign flips) reproduces
// the same floating-point value.
pub(crate) fn j_at(ix: f64, iy: f64, ixx: f64, iyy: f64, ixy: f64) -> f64 {
    let outer = ixx * (iy * iy) + (ix * ix) * iyy;
    outer - 2.0 * ((ix * iy) * ixy)
}

pub(crate) fn affg_prime_at(h: f64, j: f64) -> f64 {
    (h * h / (j * j + 1.0)).sqrt()
}
