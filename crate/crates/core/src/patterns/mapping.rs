//! Code-to-bin mappings: original, uniform (`u2`), rotation classes (`ri`),
//! rotation-invariant uniform (`riu2`) and the identity used for
//! rotation-aligned codes (`ro`).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::MAX_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingKind {
    Original,
    U2,
    Ri,
    Riu2,
    Ro,
}

impl MappingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingKind::Original => "original",
            MappingKind::U2 => "u2",
            MappingKind::Ri => "ri",
            MappingKind::Riu2 => "riu2",
            MappingKind::Ro => "ro",
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MappingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(MappingKind::Original),
            "u2" => Ok(MappingKind::U2),
            "ri" => Ok(MappingKind::Ri),
            "riu2" => Ok(MappingKind::Riu2),
            "ro" => Ok(MappingKind::Ro),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mapping {s:?}; expected original, u2, ri, riu2 or ro"
            ))),
        }
    }
}

/// A total map from `P`-bit codes to histogram bins.
#[derive(Debug, Clone)]
pub struct Mapping {
    kind: MappingKind,
    points: usize,
    bin_count: usize,
    /// `None` for the identity kinds.
    table: Option<Arc<[u32]>>,
}

impl Mapping {
    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    #[inline]
    pub fn bin(&self, code: u32) -> usize {
        match &self.table {
            Some(t) => t[code as usize] as usize,
            None => code as usize,
        }
    }

    /// The bin of every code in `[0, 2^P)`.
    pub fn table(&self) -> Vec<u32> {
        match &self.table {
            Some(t) => t.to_vec(),
            None => (0..1u32 << self.points).collect(),
        }
    }
}

/// Number of circular 0/1 transitions among the low `bits` bits of `code`.
pub fn transitions(code: u32, bits: usize) -> u32 {
    ((code ^ rotate_right(code, 1, bits)) & low_mask(bits)).count_ones()
}

/// Smallest value over all circular rotations of a `bits`-bit code.
pub fn min_rotation(code: u32, bits: usize) -> u32 {
    (0..bits).map(|k| rotate_right(code, k, bits)).min().unwrap_or(code)
}

fn low_mask(bits: usize) -> u32 {
    if bits >= 32 {
        u32::MAX
    } else {
        (1u32 << bits) - 1
    }
}

fn rotate_right(code: u32, k: usize, bits: usize) -> u32 {
    let k = k % bits;
    if k == 0 {
        return code;
    }
    ((code >> k) | (code << (bits - k))) & low_mask(bits)
}

/// Builds the mapping table for `P`-bit codes.
pub fn build_mapping(kind: MappingKind, points: usize) -> Result<Mapping> {
    if points == 0 {
        return Err(Error::InvalidParameter("mapping needs at least one bit".into()));
    }
    if points > MAX_POINTS {
        return Err(Error::Capacity(format!(
            "mapping tables are limited to P <= {MAX_POINTS}, got {points}"
        )));
    }
    let size = 1u32 << points;
    let uniform = |c: u32| transitions(c, points) <= 2;
    let (table, bin_count): (Option<Vec<u32>>, usize) = match kind {
        MappingKind::Original | MappingKind::Ro => (None, size as usize),
        MappingKind::U2 => {
            let shared = (points * (points - 1) + 2) as u32;
            let mut next = 0u32;
            let table = (0..size)
                .map(|c| {
                    if uniform(c) {
                        next += 1;
                        next - 1
                    } else {
                        shared
                    }
                })
                .collect();
            (Some(table), shared as usize + 1)
        }
        MappingKind::Ri => {
            let reps: Vec<u32> = (0..size).map(|c| min_rotation(c, points)).collect();
            // a code's class representative is never larger than the code,
            // so visiting codes in order numbers the classes by representative
            let mut index = vec![u32::MAX; size as usize];
            let mut next = 0u32;
            for c in 0..size {
                if reps[c as usize] == c {
                    index[c as usize] = next;
                    next += 1;
                }
            }
            let table = reps.iter().map(|&r| index[r as usize]).collect();
            (Some(table), next as usize)
        }
        MappingKind::Riu2 => {
            let table = (0..size)
                .map(|c| if uniform(c) { c.count_ones() } else { points as u32 + 1 })
                .collect();
            (Some(table), points + 2)
        }
    };
    Ok(Mapping {
        kind,
        points,
        bin_count,
        table: table.map(Arc::from),
    })
}
