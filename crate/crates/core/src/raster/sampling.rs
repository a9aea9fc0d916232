use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Raster;
use crate::error::{Error, Result};

/// Largest neighbor count; codes are held in a `u32` and mapping tables
/// hold `2^P` entries.
pub const MAX_POINTS: usize = 24;

/// Offsets closer than this to an integer are treated as lattice points and
/// read directly.
const SNAP: f64 = 1e-9;

/// Circular sampling geometry: `points` neighbors on a circle of `radius`.
///
/// Neighbor `p` lies at angle `2 pi p / P`, measured counterclockwise from
/// the +x axis with the image y axis pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    radius: f64,
    points: usize,
}

impl NeighborhoodSpec {
    pub fn new(radius: f64, points: usize) -> Result<Self> {
        if !(radius.is_finite() && radius >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be finite and >= 1, got {radius}"
            )));
        }
        if points < 4 || !points.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "neighbor count must be even and >= 4, got {points}"
            )));
        }
        if points > MAX_POINTS {
            return Err(Error::Capacity(format!(
                "neighbor count {points} exceeds the supported maximum of {MAX_POINTS}"
            )));
        }
        Ok(NeighborhoodSpec { radius, points })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `ceil(R)`: the farthest whole-pixel distance a sample can touch
    /// along either axis, apart from the bilinear support.
    pub fn reach(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// Border band excluded from descriptor histograms: `ceil(R) + 2`.
    pub fn pipeline_margin(&self) -> usize {
        self.reach() + 2
    }

    pub fn kernel(&self) -> SamplingKernel {
        SamplingKernel::new(self)
    }
}

/// One bilinear tap: a pixel offset from the center and its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub dx: isize,
    pub dy: isize,
    pub weight: f64,
}

/// Precomputed interpolation taps for every neighbor of a
/// [`NeighborhoodSpec`].
///
/// When `P` is divisible by 4 only the first quadrant is derived from
/// trigonometry; the other quadrants are exact quarter-turn copies of it, so
/// a rotated image yields bit-identical samples.
#[derive(Debug, Clone)]
pub struct SamplingKernel {
    spec: NeighborhoodSpec,
    taps: Vec<Vec<Tap>>,
    /// Largest absolute tap offset along either axis.
    extent: usize,
}

impl SamplingKernel {
    pub fn new(spec: &NeighborhoodSpec) -> Self {
        let p_count = spec.points;
        let direct = |p: usize| {
            let angle = 2.0 * PI * p as f64 / p_count as f64;
            bilinear_taps(spec.radius * angle.cos(), -spec.radius * angle.sin())
        };
        let taps: Vec<Vec<Tap>> = if p_count.is_multiple_of(4) {
            let quarter = p_count / 4;
            let base: Vec<Vec<Tap>> = (0..quarter).map(direct).collect();
            (0..p_count)
                .map(|p| {
                    let turns = p / quarter;
                    base[p % quarter].iter().map(|t| rotate_tap(*t, turns)).collect()
                })
                .collect()
        } else {
            (0..p_count).map(direct).collect()
        };
        let extent = taps
            .iter()
            .flatten()
            .map(|t| t.dx.unsigned_abs().max(t.dy.unsigned_abs()))
            .max()
            .unwrap_or(0);
        SamplingKernel {
            spec: *spec,
            taps,
            extent,
        }
    }

    pub fn spec(&self) -> &NeighborhoodSpec {
        &self.spec
    }

    pub fn taps(&self, p: usize) -> &[Tap] {
        &self.taps[p]
    }

    /// Fills `out` with the `P` neighbor samples around `(x, y)`. The caller
    /// guarantees the center is far enough from the border.
    pub(crate) fn sample_into<R: Raster + ?Sized>(&self, img: &R, x: usize, y: usize, out: &mut [f64]) {
        for (slot, taps) in out.iter_mut().zip(&self.taps) {
            let mut acc = 0.0;
            for t in taps {
                let px = (x as isize + t.dx) as usize;
                let py = (y as isize + t.dy) as usize;
                acc += t.weight * img.raw(px, py);
            }
            *slot = acc;
        }
    }

    /// Checks that every tap around `(x, y)` reads a defined value.
    pub fn check_center<R: Raster + ?Sized>(&self, img: &R, x: usize, y: usize) -> Result<()> {
        let need = self.spec.reach() + 1 + img.margin();
        let need = need.max(self.extent + img.margin());
        let ok = x >= need && y >= need && x + need < img.width() && y + need < img.height();
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x,
                y,
                reason: format!(
                    "center must be at least {need} pixels inside a {}x{} raster",
                    img.width(),
                    img.height()
                ),
            })
        }
    }

    pub fn sample<R: Raster + ?Sized>(&self, img: &R, x: usize, y: usize) -> Result<Vec<f64>> {
        self.check_center(img, x, y)?;
        let mut out = vec![0.0; self.spec.points];
        self.sample_into(img, x, y, &mut out);
        Ok(out)
    }
}

/// Samples the `P` circular neighbors of `center` by bilinear interpolation.
/// Lattice-aligned samples are read without interpolation.
pub fn sample_circle<R: Raster + ?Sized>(img: &R, center: (usize, usize), spec: &NeighborhoodSpec) -> Result<Vec<f64>> {
    spec.kernel().sample(img, center.0, center.1)
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP {
        r
    } else {
        v
    }
}

fn bilinear_taps(dx: f64, dy: f64) -> Vec<Tap> {
    let (dx, dy) = (snap(dx), snap(dy));
    let (x0, y0) = (dx.floor(), dy.floor());
    let (fx, fy) = (dx - x0, dy - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    ]
    .into_iter()
    .filter(|&(_, _, w)| w != 0.0)
    .map(|(dx, dy, weight)| Tap { dx, dy, weight })
    .collect()
}

/// Rotates a tap offset by `turns` quarter turns counterclockwise as
/// displayed: `(dx, dy) -> (dy, -dx)`.
fn rotate_tap(mut t: Tap, turns: usize) -> Tap {
    for _ in 0..turns % 4 {
        t = Tap {
            dx: t.dy,
            dy: -t.dx,
            weight: t.weight,
        };
    }
    t
}
