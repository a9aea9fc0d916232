//! Per-pixel binary pattern codes.

use serde::{Deserialize, Serialize};

/// A `P`-bit pattern code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternCode {
    value: u32,
    bits: u8,
}

impl PatternCode {
    pub fn new(value: u32, bits: u8) -> Option<Self> {
        (bits as u32 <= 32 && (bits == 32 || value < (1u32 << bits))).then_some(PatternCode { value, bits })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn bits(self) -> u8 {
        self.bits
    }
}

/// Thresholding with `s(0) = 1`.
#[inline]
pub fn sign_bit(diff: f64) -> u32 {
    (diff >= 0.0) as u32
}

/// `sum_p s(g_p - g_c) 2^p`.
pub fn lbp_code(center: f64, neighbors: &[f64]) -> PatternCode {
    let mut value = 0u32;
    for (p, &g) in neighbors.iter().enumerate() {
        value |= sign_bit(g - center) << p;
    }
    PatternCode {
        value,
        bits: neighbors.len() as u8,
    }
}

/// The same kernel as [`lbp_code`], applied to gradient-magnitude samples
/// (LGP) or affine-gradient samples (LAGP).
pub fn scalar_code(center: f64, neighbors: &[f64]) -> PatternCode {
    lbp_code(center, neighbors)
}

/// Reference direction `Ds`.
///
/// `D` is the index of the largest `|g_p - g_c|` (smallest index on ties);
/// `Ds = (D + P/2 * s(g_D - g_c)) mod P`.
pub fn reference_direction(center: f64, neighbors: &[f64]) -> usize {
    let p_count = neighbors.len();
    debug_assert!(
        p_count.is_multiple_of(2),
        "reference direction needs an even neighbor count"
    );
    let mut best = 0;
    let mut best_mag = f64::NEG_INFINITY;
    for (p, &g) in neighbors.iter().enumerate() {
        let mag = (g - center).abs();
        if mag > best_mag {
            best = p;
            best_mag = mag;
        }
    }
    let push = (p_count / 2) * sign_bit(neighbors[best] - center) as usize;
    (best + push) % p_count
}

/// Rotation-aligned code of `comparators` against `comparator_center`, with
/// bit `p` moved to position `(p - ds) mod P`.
pub fn aligned_code(comparator_center: f64, comparators: &[f64], ds: usize) -> PatternCode {
    let p_count = comparators.len();
    let mut value = 0u32;
    for (p, &v) in comparators.iter().enumerate() {
        let pos = (p + p_count - ds % p_count) % p_count;
        value |= sign_bit(v - comparator_center) << pos;
    }
    PatternCode {
        value,
        bits: p_count as u8,
    }
}

/// Rotation-aligned code. The reference direction always comes from the
/// intensity samples; the bits come from the comparator samples (the
/// intensities themselves for roLBP, affine-gradient samples for roLAGP).
pub fn ro_code(center: f64, intensities: &[f64], comparator_center: f64, comparators: &[f64]) -> PatternCode {
    debug_assert_eq!(intensities.len(), comparators.len());
    aligned_code(comparator_center, comparators, reference_direction(center, intensities))
}
