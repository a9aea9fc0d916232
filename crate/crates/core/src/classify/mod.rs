//! Chi-square nearest-neighbor classification and dataset protocols.

mod manifest;
mod protocol;

pub use manifest::{LabelSet, Manifest, ManifestEntry};
pub use protocol::{
    confusion_to_csv, run_kth, run_protocol, DescriptorCache, EvalReport, Evaluator, FoldReport, PipelineConfig,
    Selection,
};

use crate::error::{Error, Result};
use crate::patterns::Descriptor;

/// `sum_i (a_i - b_i)^2 / (a_i + b_i)`, skipping bins where both are zero.
pub fn chi_square(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "chi-square between vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(chi_square_unchecked(a.iter().copied(), b.iter().copied()))
}

fn chi_square_unchecked(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b)
        .map(|(x, y)| {
            let s = x + y;
            if s == 0.0 {
                0.0
            } else {
                let d = x - y;
                d * d / s
            }
        })
        .sum()
}

/// Chi-square distance between descriptors with identical block layout.
pub fn chi_square_descriptors(a: &Descriptor, b: &Descriptor) -> Result<f64> {
    if a.blocks.len() != b.blocks.len()
        || a.blocks
            .iter()
            .zip(&b.blocks)
            .any(|(x, y)| x.bins.len() != y.bins.len())
    {
        return Err(Error::Shape(format!(
            "chi-square between layouts {:?} and {:?}",
            a.block_lengths(),
            b.block_lengths()
        )));
    }
    Ok(chi_square_unchecked(a.values(), b.values()))
}

/// Index and distance of the closest gallery item; ties keep the earliest.
pub fn nearest(query: &Descriptor, gallery: &[(Descriptor, usize)]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (d, _)) in gallery.iter().enumerate() {
        let dist = chi_square_descriptors(query, d)?;
        if best.is_none_or(|(_, b)| dist < b) {
            best = Some((i, dist));
        }
    }
    best.ok_or(Error::EmptyGallery)
}

/// Label of the nearest gallery item under the chi-square distance.
pub fn nn_classify(query: &Descriptor, gallery: &[(Descriptor, usize)]) -> Result<usize> {
    nearest(query, gallery).map(|(i, _)| gallery[i].1)
}

/// Percentage of `(predicted, truth)` pairs that agree.
pub fn accuracy_percent(predictions: &[(usize, usize)]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().filter(|(p, t)| p == t).count();
    hits as f64 * 100.0 / predictions.len() as f64
}
