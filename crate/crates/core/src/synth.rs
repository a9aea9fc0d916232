//! Deterministic synthetic textures used by the test fixtures and the guide.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{gaussian_blur, GrayImage};

/// A texture that tiles seamlessly: a random sum of sinusoids whose
/// frequencies are whole cycles per `size` pixels. Values lie in `[0, 255]`.
pub fn toroidal_texture(size: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            let fx = rng.random_range(-9i32..=9) as f64;
            let fy = rng.random_range(-9i32..=9) as f64;
            (fx, fy, rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let n = size as f64;
    let raw: Vec<f64> = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64, (i / size) as f64);
            waves
                .iter()
                .map(|&(fx, fy, a, ph)| a * (2.0 * PI * (fx * x + fy * y) / n + ph).sin())
                .sum()
        })
        .collect();
    rescale(size, size, raw)
}

/// A band-limited grating: a carrier at `period` pixels along `angle` plus
/// a weaker second harmonic.
pub fn grating(size: usize, period: f64, angle: f64, phase: f64) -> GrayImage {
    let (c, s) = (angle.cos(), angle.sin());
    GrayImage::from_fn(size, size, |x, y| {
        let u = 2.0 * PI * (x as f64 * c + y as f64 * s) / period;
        128.0 + 70.0 * (u + phase).sin() + 20.0 * (2.0 * u + 0.5 * phase).sin()
    })
    .expect("grating is finite")
}

/// A checkerboard with square cells of `cell` pixels, rotated by `angle`,
/// smoothed with a Gaussian of `blur` pixels.
pub fn blurred_checkerboard(size: usize, cell: f64, angle: f64, offset: (f64, f64), blur: f64) -> GrayImage {
    let (c, s) = (angle.cos(), angle.sin());
    let sharp = GrayImage::from_fn(size, size, |x, y| {
        let (x, y) = (x as f64, y as f64);
        let u = ((x * c + y * s) + offset.0) / cell;
        let v = ((-x * s + y * c) + offset.1) / cell;
        if (u.floor() as i64 + v.floor() as i64).rem_euclid(2) == 0 {
            60.0
        } else {
            195.0
        }
    })
    .expect("checkerboard is finite");
    gaussian_blur(&sharp, blur).expect("positive blur")
}

/// Which half of the two-class fixture an image belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// One generated fixture image.
#[derive(Debug, Clone)]
pub struct FixtureImage {
    pub name: String,
    pub label: usize,
    pub split: Split,
    pub image: GrayImage,
}

/// Side length of the two-class fixture images.
pub const FIXTURE_SIZE: usize = 64;

/// Two texture classes, ten training and ten test images each: label 0 are
/// gratings, label 1 blurred checkerboards, each at a random quarter-turn
/// orientation, scale and phase.
pub fn two_class_fixture(seed: u64) -> Vec<FixtureImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for split in [Split::Train, Split::Test] {
        for label in 0..2 {
            for i in 0..10 {
                let angle = rng.random_range(0..4) as f64 * PI / 2.0;
                let image = if label == 0 {
                    grating(
                        FIXTURE_SIZE,
                        rng.random_range(8.0..9.0),
                        angle,
                        rng.random_range(0.0..2.0 * PI),
                    )
                } else {
                    let offset = (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
                    blurred_checkerboard(FIXTURE_SIZE, rng.random_range(8.0..9.0), angle, offset, 1.5)
                };
                let prefix = match split {
                    Split::Train => "train",
                    Split::Test => "test",
                };
                let class = if label == 0 { "grating" } else { "checker" };
                out.push(FixtureImage {
                    name: format!("{prefix}_{class}_{i:02}.pgm"),
                    label,
                    split,
                    image: quantize(&image),
                });
            }
        }
    }
    out
}

/// Rounds to whole intensities in `[0, 255]`, as stored in an 8-bit file.
pub fn quantize(img: &GrayImage) -> GrayImage {
    GrayImage::new(
        img.width(),
        img.height(),
        img.data().iter().map(|v| v.round().clamp(0.0, 255.0)).collect(),
    )
    .expect("quantized values are finite")
}

fn rescale(width: usize, height: usize, raw: Vec<f64>) -> GrayImage {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    GrayImage::new(
        width,
        height,
        raw.iter()
            .map(|v| ((v - lo) * 255.0 / span).clamp(0.0, 255.0))
            .collect(),
    )
    .expect("texture is finite")
}
