//! Histogram bin selection learned from a labelled training set.
//!
//! Two criteria are available: keep the `N` bins with the largest mean
//! training frequency, or keep every occupied bin whose intraclass variance
//! is below a threshold `phi`. Masks are learned per block.
//!
//! Per-bin statistics sum their terms in sorted order, so results do not
//! depend on the order of training items or classes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{accuracy_percent, nn_classify};
use crate::error::{Error, Result};
use crate::patterns::{Descriptor, DescriptorKind, MappingKind, Normalization};

/// How per-class variances combine into one value per bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub aggregation: Aggregation,
    /// Units the training histograms are rescaled to before computing
    /// statistics; `None` uses them as stored.
    pub units: Option<Normalization>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            aggregation: Aggregation::Mean,
            units: Some(Normalization::Percent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    TopN,
    VarThreshold,
}

impl SelectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMethod::TopN => "top_n",
            SelectionMethod::VarThreshold => "var_threshold",
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "top_n" | "topn" => Ok(SelectionMethod::TopN),
            "var_threshold" | "var" => Ok(SelectionMethod::VarThreshold),
            _ => Err(Error::InvalidParameter(format!(
                "unknown selection method {s:?}; expected topn or var"
            ))),
        }
    }
}

/// Labelled descriptors sharing one layout, with at least two items per class.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    items: Vec<(Descriptor, usize)>,
    classes: BTreeMap<usize, Vec<usize>>,
}

impl TrainingSet {
    pub fn new(items: Vec<(Descriptor, usize)>) -> Result<Self> {
        let first = items
            .first()
            .map(|(d, _)| d)
            .ok_or_else(|| Error::InvalidParameter("training set is empty".into()))?;
        for (d, _) in &items[1..] {
            same_layout(first, d)?;
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, (_, label)) in items.iter().enumerate() {
            classes.entry(*label).or_default().push(i);
        }
        if let Some((&label, members)) = classes.iter().find(|(_, m)| m.len() < 2) {
            return Err(Error::TooFewSamples {
                label,
                count: members.len(),
            });
        }
        Ok(TrainingSet { items, classes })
    }

    pub fn items(&self) -> &[(Descriptor, usize)] {
        &self.items
    }

    pub fn into_items(self) -> Vec<(Descriptor, usize)> {
        self.items
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    fn layout(&self) -> &Descriptor {
        &self.items[0].0
    }

    /// Block `b` of every item, rescaled to the configured units.
    fn block_rows(&self, b: usize, units: Option<Normalization>) -> Vec<Vec<f64>> {
        self.items
            .iter()
            .map(|(d, _)| {
                let mut bins = d.blocks[b].bins.clone();
                if let Some(u) = units {
                    u.apply(&mut bins);
                }
                bins
            })
            .collect()
    }
}

fn same_layout(a: &Descriptor, b: &Descriptor) -> Result<()> {
    if a.kind != b.kind
        || a.points != b.points
        || a.radius != b.radius
        || a.mapping != b.mapping
        || a.normalization != b.normalization
        || a.block_lengths() != b.block_lengths()
    {
        return Err(Error::Shape(format!(
            "descriptor layouts differ: {} R={} P={} {} {} {:?} vs {} R={} P={} {} {} {:?}",
            a.kind,
            a.radius,
            a.points,
            a.mapping,
            a.normalization,
            a.block_lengths(),
            b.kind,
            b.radius,
            b.points,
            b.mapping,
            b.normalization,
            b.block_lengths()
        )));
    }
    Ok(())
}

fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Unbiased sample variance, summed in sorted order.
fn sample_variance(values: &mut [f64]) -> f64 {
    let n = values.len() as f64;
    let mean = sorted_sum(values) / n;
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    sorted_sum(&mut sq) / (n - 1.0)
}

/// Per-block, per-bin intraclass variance aggregated over classes.
pub fn intraclass_variance(training: &TrainingSet, config: &SelectionConfig) -> Vec<Vec<f64>> {
    let layout = training.layout();
    (0..layout.blocks.len())
        .map(|b| {
            let rows = training.block_rows(b, config.units);
            (0..layout.blocks[b].bins.len())
                .into_par_iter()
                .map(|bin| {
                    let mut per_class: Vec<f64> = training
                        .classes
                        .values()
                        .map(|members| {
                            let mut vals: Vec<f64> = members.iter().map(|&i| rows[i][bin]).collect();
                            sample_variance(&mut vals)
                        })
                        .collect();
                    match config.aggregation {
                        Aggregation::Mean => {
                            let c = per_class.len() as f64;
                            sorted_sum(&mut per_class) / c
                        }
                        Aggregation::Max => per_class.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    }
                })
                .collect()
        })
        .collect()
}

/// Per-block, per-bin mean value over all training items.
pub fn mean_frequency(training: &TrainingSet, config: &SelectionConfig) -> Vec<Vec<f64>> {
    let layout = training.layout();
    let n = training.items.len() as f64;
    (0..layout.blocks.len())
        .map(|b| {
            let rows = training.block_rows(b, config.units);
            (0..layout.blocks[b].bins.len())
                .into_par_iter()
                .map(|bin| {
                    let mut vals: Vec<f64> = rows.iter().map(|r| r[bin]).collect();
                    sorted_sum(&mut vals) / n
                })
                .collect()
        })
        .collect()
}

/// Where a mask came from; checked against descriptors before masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskProvenance {
    pub method: SelectionMethod,
    pub parameter: f64,
    pub descriptor: DescriptorKind,
    pub radius: f64,
    pub points: usize,
    pub mapping: MappingKind,
    pub normalization: Normalization,
    /// Bin count of each block before selection.
    pub block_bins: Vec<usize>,
}

/// Kept bin indices per block, strictly increasing, never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub blocks: Vec<Vec<usize>>,
    pub provenance: MaskProvenance,
}

impl FeatureMask {
    /// A mask that keeps every bin of `layout`.
    pub fn identity(layout: &Descriptor) -> Self {
        FeatureMask {
            blocks: layout.blocks.iter().map(|b| (0..b.bins.len()).collect()).collect(),
            provenance: provenance(layout, SelectionMethod::TopN, f64::INFINITY),
        }
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

fn provenance(layout: &Descriptor, method: SelectionMethod, parameter: f64) -> MaskProvenance {
    MaskProvenance {
        method,
        parameter,
        descriptor: layout.kind,
        radius: layout.radius,
        points: layout.points,
        mapping: layout.mapping,
        normalization: layout.normalization,
        block_bins: layout.block_lengths(),
    }
}

/// Keeps the `n` bins per block with the largest mean training frequency,
/// ties going to the smaller index.
pub fn select_top_n(training: &TrainingSet, n: usize, config: &SelectionConfig) -> Result<FeatureMask> {
    let layout = training.layout();
    let smallest = layout.block_lengths().into_iter().min().unwrap_or(0);
    if n == 0 || n > smallest {
        return Err(Error::InvalidParameter(format!(
            "top-N selection needs 1 <= N <= {smallest}, got {n}"
        )));
    }
    let blocks = mean_frequency(training, config)
        .into_iter()
        .map(|freq| {
            let mut order: Vec<usize> = (0..freq.len()).collect();
            order.sort_by(|&a, &b| freq[b].total_cmp(&freq[a]).then(a.cmp(&b)));
            let mut kept = order[..n].to_vec();
            kept.sort_unstable();
            kept
        })
        .collect();
    Ok(FeatureMask {
        blocks,
        provenance: provenance(layout, SelectionMethod::TopN, n as f64),
    })
}

/// Keeps occupied bins whose aggregated intraclass variance is strictly
/// below `phi`. A block where nothing qualifies keeps its lowest-variance
/// occupied bin.
pub fn select_by_variance(training: &TrainingSet, phi: f64, config: &SelectionConfig) -> Result<FeatureMask> {
    if phi.is_nan() || phi <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "variance threshold must be positive, got {phi}"
        )));
    }
    let layout = training.layout();
    let freq = mean_frequency(training, config);
    let blocks = intraclass_variance(training, config)
        .into_iter()
        .zip(freq)
        .map(|(var, freq)| {
            let kept: Vec<usize> = (0..var.len()).filter(|&i| freq[i] > 0.0 && var[i] < phi).collect();
            if !kept.is_empty() {
                return kept;
            }
            let occupied = (0..var.len()).filter(|&i| freq[i] > 0.0);
            let pick = occupied
                .min_by(|&a, &b| var[a].total_cmp(&var[b]).then(a.cmp(&b)))
                .unwrap_or(0);
            vec![pick]
        })
        .collect();
    Ok(FeatureMask {
        blocks,
        provenance: provenance(layout, SelectionMethod::VarThreshold, phi),
    })
}

/// Gathers the kept bins of each block and renormalizes each block to the
/// descriptor's normalization.
pub fn apply_mask(d: &Descriptor, mask: &FeatureMask) -> Result<Descriptor> {
    let p = &mask.provenance;
    if d.kind != p.descriptor || d.points != p.points || d.mapping != p.mapping || d.radius != p.radius {
        return Err(Error::Shape(format!(
            "mask for {} R={} P={} {} applied to {} R={} P={} {}",
            p.descriptor, p.radius, p.points, p.mapping, d.kind, d.radius, d.points, d.mapping
        )));
    }
    if d.block_lengths() != p.block_bins || mask.blocks.len() != d.blocks.len() {
        return Err(Error::Shape(format!(
            "mask expects blocks of {:?} bins, descriptor has {:?}",
            p.block_bins,
            d.block_lengths()
        )));
    }
    let mut out = d.clone();
    for (block, kept) in out.blocks.iter_mut().zip(&mask.blocks) {
        if let Some(&bad) = kept.iter().find(|&&i| i >= block.bins.len()) {
            return Err(Error::Shape(format!(
                "mask index {bad} outside a block of {} bins",
                block.bins.len()
            )));
        }
        if kept.len() == block.bins.len() {
            continue;
        }
        let mut bins: Vec<f64> = kept.iter().map(|&i| block.bins[i]).collect();
        block.normalization.apply(&mut bins);
        block.bins = bins;
    }
    Ok(out)
}

/// Learns a mask with `method` and a numeric parameter (`N` or `phi`).
pub fn learn_mask(
    training: &TrainingSet,
    method: SelectionMethod,
    parameter: f64,
    config: &SelectionConfig,
) -> Result<FeatureMask> {
    match method {
        SelectionMethod::VarThreshold => select_by_variance(training, parameter, config),
        SelectionMethod::TopN => {
            if parameter.fract() != 0.0 || parameter < 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "top-N parameter must be a positive integer, got {parameter}"
                )));
            }
            select_top_n(training, parameter as usize, config)
        }
    }
}

/// Serializes a mask as CSV: provenance rows, then one
/// `block,<index>,<bins>,<kept...>` row per block.
pub fn mask_to_csv(mask: &FeatureMask) -> String {
    let p = &mask.provenance;
    let mut out = format!(
        "method,{}\nparameter,{}\ndescriptor,{}\nradius,{}\npoints,{}\nmapping,{}\nnormalization,{}\n",
        p.method, p.parameter, p.descriptor, p.radius, p.points, p.mapping, p.normalization
    );
    for (i, (kept, bins)) in mask.blocks.iter().zip(&p.block_bins).enumerate() {
        out.push_str(&format!("block,{i},{bins}"));
        for k in kept {
            out.push_str(&format!(",{k}"));
        }
        out.push('\n');
    }
    out
}

pub fn mask_from_csv(text: &str) -> Result<FeatureMask> {
    let bad = |what: String| Error::Format(format!("mask file: {what}"));
    let mut header: BTreeMap<&str, &str> = BTreeMap::new();
    let mut blocks = Vec::new();
    let mut block_bins = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut fields = line.split(',');
        let key = fields.next().unwrap_or_default();
        if key == "block" {
            let index: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("bad block row {line:?}")))?;
            if index != blocks.len() {
                return Err(bad(format!("block {index} out of order")));
            }
            let bins: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("bad block row {line:?}")))?;
            let kept = fields
                .map(|s| s.parse::<usize>().map_err(|_| bad(format!("bad index {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if kept.is_empty() || kept.windows(2).any(|w| w[0] >= w[1]) || kept.iter().any(|&k| k >= bins) {
                return Err(bad(format!(
                    "block {index} indices must be increasing and below {bins}"
                )));
            }
            blocks.push(kept);
            block_bins.push(bins);
        } else {
            let value = fields.next().ok_or_else(|| bad(format!("missing value for {key}")))?;
            header.insert(key, value);
        }
    }
    let get = |k: &str| header.get(k).copied().ok_or_else(|| bad(format!("missing {k} row")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| bad(format!("bad {k}"))) };
    Ok(FeatureMask {
        blocks,
        provenance: MaskProvenance {
            method: get("method")?.parse()?,
            parameter: num("parameter")?,
            descriptor: get("descriptor")?.parse()?,
            radius: num("radius")?,
            points: get("points")?.parse().map_err(|_| bad("bad points".into()))?,
            mapping: get("mapping")?.parse()?,
            normalization: get("normalization")?.parse()?,
            block_bins,
        },
    })
}

/// One point on an accuracy-versus-parameter curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub accuracy: f64,
    pub dimension: usize,
}

/// For each parameter, learns a mask on `training`, masks both sets and
/// classifies `validation` against the masked training gallery.
pub fn sweep(
    training: &TrainingSet,
    validation: &[(Descriptor, usize)],
    method: SelectionMethod,
    grid: &[f64],
    config: &SelectionConfig,
) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&parameter| {
            let mask = learn_mask(training, method, parameter, config)?;
            let gallery = training
                .items()
                .iter()
                .map(|(d, l)| Ok((apply_mask(d, &mask)?, *l)))
                .collect::<Result<Vec<_>>>()?;
            let predictions = validation
                .par_iter()
                .map(|(d, l)| Ok((nn_classify(&apply_mask(d, &mask)?, &gallery)?, *l)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                parameter,
                accuracy: accuracy_percent(&predictions),
                dimension: mask.dimension(),
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("parameter,accuracy,dimension\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.parameter, r.accuracy, r.dimension));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::NeighborhoodSpec;

    fn desc(bins: Vec<f64>, norm: Normalization) -> Descriptor {
        Descriptor::from_blocks(
            DescriptorKind::Lbp,
            &NeighborhoodSpec::new(1.0, 4).unwrap(),
            MappingKind::Riu2,
            norm,
            vec![bins],
        )
        .unwrap()
    }

    fn raw() -> SelectionConfig {
        SelectionConfig {
            units: None,
            ..SelectionConfig::default()
        }
    }

    #[test]
    fn variance_of_two_values() {
        let t = TrainingSet::new(vec![
            (desc(vec![2.0, 1.0, 0.0, 0.0, 0.0, 0.0], Normalization::Count), 0),
            (desc(vec![4.0, 1.0, 0.0, 0.0, 0.0, 0.0], Normalization::Count), 0),
        ])
        .unwrap();
        let v = intraclass_variance(&t, &raw());
        assert_eq!(v[0][0], 2.0);
        assert_eq!(v[0][1], 0.0);
        // 2 < 2 is false
        let m = select_by_variance(&t, 2.0, &raw()).unwrap();
        assert_eq!(m.blocks[0], vec![1]);
    }

    #[test]
    fn mean_over_classes() {
        let d = |v: f64| desc(vec![v, 1.0, 1.0, 1.0, 1.0, 1.0], Normalization::Count);
        // class 0 values {2, 4}: variance 2; class 1 values {0, 2*sqrt2}: variance 4
        let s = 8f64.sqrt();
        let t = TrainingSet::new(vec![(d(2.0), 0), (d(4.0), 0), (d(0.0), 1), (d(s), 1)]).unwrap();
        let v = intraclass_variance(&t, &raw());
        assert!((v[0][0] - 3.0).abs() < 1e-12);
        let max = SelectionConfig {
            aggregation: Aggregation::Max,
            units: None,
        };
        assert!((intraclass_variance(&t, &max)[0][0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn class_with_one_item_is_rejected() {
        let d = desc(vec![1.0; 6], Normalization::Count);
        let r = TrainingSet::new(vec![(d.clone(), 0), (d.clone(), 0), (d, 1)]);
        assert!(matches!(r, Err(Error::TooFewSamples { label: 1, count: 1 })));
    }

    #[test]
    fn top_n_examples() {
        let t = TrainingSet::new(vec![
            (desc(vec![0.0, 5.0, 3.0, 5.0, 0.0, 1.0], Normalization::Count), 0),
            (desc(vec![0.0, 5.0, 3.0, 5.0, 0.0, 1.0], Normalization::Count), 0),
        ])
        .unwrap();
        assert_eq!(select_top_n(&t, 2, &raw()).unwrap().blocks[0], vec![1, 3]);
        assert_eq!(select_top_n(&t, 3, &raw()).unwrap().blocks[0], vec![1, 2, 3]);
        assert_eq!(
            select_top_n(&t, 6, &raw()).unwrap().blocks[0],
            (0..6).collect::<Vec<_>>()
        );
        assert!(select_top_n(&t, 0, &raw()).is_err());
        assert!(select_top_n(&t, 7, &raw()).is_err());
    }

    #[test]
    fn identical_training_keeps_all_occupied() {
        let d = desc(vec![10.0, 0.0, 30.0, 60.0, 0.0, 0.0], Normalization::Percent);
        let t = TrainingSet::new(vec![(d.clone(), 0), (d.clone(), 0), (d.clone(), 1), (d, 1)]).unwrap();
        for phi in [1e-6, 1.0, f64::INFINITY] {
            let m = select_by_variance(&t, phi, &SelectionConfig::default()).unwrap();
            assert_eq!(m.blocks[0], vec![0, 2, 3]);
        }
        assert!(select_by_variance(&t, 0.0, &SelectionConfig::default()).is_err());
        assert!(select_by_variance(&t, f64::NAN, &SelectionConfig::default()).is_err());
    }

    #[test]
    fn empty_selection_falls_back_to_one_bin() {
        let t = TrainingSet::new(vec![
            (desc(vec![10.0, 90.0, 0.0, 0.0, 0.0, 0.0], Normalization::Percent), 0),
            (desc(vec![40.0, 60.0, 0.0, 0.0, 0.0, 0.0], Normalization::Percent), 0),
        ])
        .unwrap();
        let m = select_by_variance(&t, 1.0, &SelectionConfig::default()).unwrap();
        assert_eq!(m.blocks[0], vec![0]);
    }

    #[test]
    fn apply_mask_renormalizes() {
        let d = desc(vec![0.1, 0.2, 0.3, 0.4, 0.0, 0.0], Normalization::UnitSum);
        let mut mask = FeatureMask::identity(&d);
        assert_eq!(apply_mask(&d, &mask).unwrap(), d);
        mask.blocks[0] = vec![2];
        let m = apply_mask(&d, &mask).unwrap();
        assert_eq!(m.blocks[0].bins, vec![1.0]);
        mask.blocks[0] = vec![1, 3];
        let m = apply_mask(&d, &mask).unwrap();
        assert!((m.blocks[0].bins[0] - 1.0 / 3.0).abs() < 1e-15);
        // already masked descriptors no longer match
        assert!(matches!(apply_mask(&m, &mask), Err(Error::Shape(_))));
    }

    #[test]
    fn mask_csv_round_trip() {
        let d = desc(vec![10.0, 20.0, 30.0, 40.0, 0.0, 0.0], Normalization::Percent);
        let mut mask = FeatureMask::identity(&d);
        mask.blocks[0] = vec![0, 3, 5];
        mask.provenance.method = SelectionMethod::VarThreshold;
        mask.provenance.parameter = 2.0;
        let csv = mask_to_csv(&mask);
        assert_eq!(
            csv,
            "method,var_threshold\nparameter,2\ndescriptor,LBP\nradius,1\npoints,4\nmapping,riu2\nnormalization,percent\nblock,0,6,0,3,5\n"
        );
        assert_eq!(mask_from_csv(&csv).unwrap(), mask);
        assert!(mask_from_csv(&csv.replace("0,3,5", "3,0")).is_err());
        mask.provenance.parameter = f64::INFINITY;
        assert_eq!(mask_from_csv(&mask_to_csv(&mask)).unwrap(), mask);
    }
}
