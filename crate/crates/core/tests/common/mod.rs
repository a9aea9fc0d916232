//! Reference implementations written directly from the definitions, kept
//! separate from the library code paths they check.
#![allow(dead_code)]

use std::path::PathBuf;

use aglbp::raster::GrayImage;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/two_class")
}

/// `sum_p s(g_p - g_c) 2^p` with an explicit power loop.
pub fn naive_lbp(center: f64, neighbors: &[f64]) -> u64 {
    let mut code = 0u64;
    for (p, &g) in neighbors.iter().enumerate() {
        let s = if g - center >= 0.0 { 1 } else { 0 };
        code += s * 2u64.pow(p as u32);
    }
    code
}

/// Rotation-aligned code found by searching every cyclic shift `k` of the
/// intensity vector for the one that puts the dominant difference at
/// position 0 (negative difference) or `P/2` (non-negative difference).
/// Requires a unique largest `|g_p - g_c|`.
pub fn shift_search_ro(center: f64, intensities: &[f64], comparator_center: f64, comparators: &[f64]) -> u64 {
    let n = intensities.len();
    for k in 0..n {
        let rotated: Vec<f64> = (0..n).map(|q| intensities[(q + k) % n]).collect();
        let mags: Vec<f64> = rotated.iter().map(|g| (g - center).abs()).collect();
        let top = mags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let at = mags.iter().position(|&m| m == top).unwrap();
        let nonneg = rotated[at] - center >= 0.0;
        if (at == 0 && !nonneg) || (at == n / 2 && nonneg) {
            let shifted: Vec<f64> = (0..n).map(|q| comparators[(q + k) % n]).collect();
            return naive_lbp(comparator_center, &shifted);
        }
    }
    panic!("no aligning shift found");
}

/// Bilinear sample at a real-valued position, snapping near-integer
/// coordinates to exact lattice reads.
pub fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    let (x, y) = (snap(x), snap(y));
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let at = |xx: usize, yy: usize| {
        if xx < img.width() && yy < img.height() {
            img.get(xx, yy)
        } else {
            0.0
        }
    };
    let mut v = 0.0;
    for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
        for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
            if wx * wy != 0.0 {
                v += wx * wy * at(x0 + dx, y0 + dy);
            }
        }
    }
    v
}

pub fn circle(img: &GrayImage, x: usize, y: usize, radius: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|p| {
            let a = 2.0 * std::f64::consts::PI * p as f64 / points as f64;
            bilinear(img, x as f64 + radius * a.cos(), y as f64 - radius * a.sin())
        })
        .collect()
}

/// Per-pixel LBP histogram (raw counts, original mapping) over pixels at
/// least `ceil(R) + 2` from every border.
pub fn brute_force_lbp_histogram(img: &GrayImage, radius: f64, points: usize) -> Vec<f64> {
    let m = radius.ceil() as usize + 2;
    let mut hist = vec![0.0; 1 << points];
    for y in m..img.height() - m {
        for x in m..img.width() - m {
            let code = naive_lbp(img.get(x, y), &circle(img, x, y, radius, points));
            hist[code as usize] += 1.0;
        }
    }
    hist
}

/// A grating at an oblique angle, so no two lattice neighbors tie.
pub fn sinusoidal_grating(size: usize) -> GrayImage {
    GrayImage::from_fn(size, size, |x, y| {
        let u = 0.37 * x as f64 + 0.23 * y as f64;
        128.0 + 90.0 * u.sin() + 10.0 * (0.11 * x as f64 - 0.41 * y as f64).cos()
    })
    .unwrap()
}

/// Minimal deterministic generator for test vectors.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn vec(&mut self, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| self.next_f64() * scale).collect()
    }
}

/// True when the largest `|g_p - c|` is attained exactly once.
pub fn unique_max(center: f64, g: &[f64]) -> bool {
    let mags: Vec<f64> = g.iter().map(|v| (v - center).abs()).collect();
    let top = mags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mags.iter().filter(|&&m| m == top).count() == 1
}
