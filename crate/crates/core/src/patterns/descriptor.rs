use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codes::{aligned_code, lbp_code, reference_direction};
use super::mapping::{build_mapping, Mapping, MappingKind};
use crate::error::{Error, Result};
use crate::gradient::GradientFields;
use crate::raster::{GrayImage, NeighborhoodSpec, SamplingKernel, ScalarField};

/// What a histogram block counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeSource {
    Lbp,
    Lgp,
    Lagp,
    RoLbp,
    RoLagp,
}

impl CodeSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CodeSource::Lbp => "lbp",
            CodeSource::Lgp => "lgp",
            CodeSource::Lagp => "lagp",
            CodeSource::RoLbp => "rolbp",
            CodeSource::RoLagp => "rolagp",
        }
    }
}

/// Histogram scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Raw pixel counts.
    Count,
    /// Each block sums to 1.
    UnitSum,
    /// Each block sums to 100.
    Percent,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Count => "count",
            Normalization::UnitSum => "unit_sum",
            Normalization::Percent => "percent",
        }
    }

    /// Target block sum, or `None` for raw counts.
    pub fn total(self) -> Option<f64> {
        match self {
            Normalization::Count => None,
            Normalization::UnitSum => Some(1.0),
            Normalization::Percent => Some(100.0),
        }
    }

    /// Rescales `values` in place so they sum to the target total. All-zero
    /// inputs and raw counts are left untouched.
    pub fn apply(self, values: &mut [f64]) {
        if let Some(target) = self.total() {
            let sum: f64 = values.iter().sum();
            if sum > 0.0 {
                values.iter_mut().for_each(|v| *v = *v * target / sum);
            }
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "count" => Ok(Normalization::Count),
            "unit_sum" | "unit" => Ok(Normalization::UnitSum),
            "percent" => Ok(Normalization::Percent),
            _ => Err(Error::InvalidParameter(format!(
                "unknown normalization {s:?}; expected count, unit_sum or percent"
            ))),
        }
    }
}

/// Named descriptor layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DescriptorKind {
    #[serde(rename = "LBP")]
    Lbp,
    #[serde(rename = "LGP")]
    Lgp,
    #[serde(rename = "LAGP")]
    Lagp,
    /// LGP followed by LBP.
    #[serde(rename = "MI-G")]
    MiG,
    /// LAGP followed by LBP.
    #[serde(rename = "MI-AG")]
    MiAg,
    #[serde(rename = "roLBP")]
    RoLbp,
    #[serde(rename = "roLAGP")]
    RoLagp,
    /// roLBP followed by roLAGP.
    #[serde(rename = "AGLBP")]
    Aglbp,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 8] = [
        DescriptorKind::Lbp,
        DescriptorKind::Lgp,
        DescriptorKind::Lagp,
        DescriptorKind::MiG,
        DescriptorKind::MiAg,
        DescriptorKind::RoLbp,
        DescriptorKind::RoLagp,
        DescriptorKind::Aglbp,
    ];

    pub fn blocks(self) -> &'static [CodeSource] {
        use CodeSource::*;
        match self {
            DescriptorKind::Lbp => &[Lbp],
            DescriptorKind::Lgp => &[Lgp],
            DescriptorKind::Lagp => &[Lagp],
            DescriptorKind::MiG => &[Lgp, Lbp],
            DescriptorKind::MiAg => &[Lagp, Lbp],
            DescriptorKind::RoLbp => &[RoLbp],
            DescriptorKind::RoLagp => &[RoLagp],
            DescriptorKind::Aglbp => &[RoLbp, RoLagp],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Lbp => "LBP",
            DescriptorKind::Lgp => "LGP",
            DescriptorKind::Lagp => "LAGP",
            DescriptorKind::MiG => "MI-G",
            DescriptorKind::MiAg => "MI-AG",
            DescriptorKind::RoLbp => "roLBP",
            DescriptorKind::RoLagp => "roLAGP",
            DescriptorKind::Aglbp => "AGLBP",
        }
    }

    /// The mapping a descriptor uses when none is requested.
    pub fn default_mapping(self) -> MappingKind {
        match self {
            DescriptorKind::RoLbp | DescriptorKind::RoLagp | DescriptorKind::Aglbp => MappingKind::Ro,
            _ => MappingKind::Original,
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', '_'], "");
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.as_str().to_ascii_lowercase().replace('-', "") == norm)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown descriptor {s:?}; expected one of LBP, LGP, LAGP, MI-G, MI-AG, roLBP, roLAGP, AGLBP"
                ))
            })
    }
}

/// Which samples choose the reference direction for roLAGP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// Intensity differences (shared with roLBP).
    #[default]
    Intensity,
    /// Affine-gradient differences.
    Comparator,
}

/// One histogram block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternHistogram {
    pub bins: Vec<f64>,
    pub mapping: MappingKind,
    pub points: usize,
    pub source: CodeSource,
    pub normalization: Normalization,
}

/// An ordered concatenation of pattern histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub kind: DescriptorKind,
    pub radius: f64,
    pub points: usize,
    pub mapping: MappingKind,
    pub normalization: Normalization,
    pub blocks: Vec<PatternHistogram>,
}

impl Descriptor {
    /// Reassembles a descriptor from raw block values, e.g. after reading a
    /// serialized histogram.
    pub fn from_blocks(
        kind: DescriptorKind,
        spec: &NeighborhoodSpec,
        mapping: MappingKind,
        normalization: Normalization,
        blocks: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let sources = kind.blocks();
        if blocks.len() != sources.len() {
            return Err(Error::Shape(format!(
                "{kind} has {} blocks, got {}",
                sources.len(),
                blocks.len()
            )));
        }
        Ok(Descriptor {
            kind,
            radius: spec.radius(),
            points: spec.points(),
            mapping,
            normalization,
            blocks: blocks
                .into_iter()
                .zip(sources)
                .map(|(bins, &source)| PatternHistogram {
                    bins,
                    mapping,
                    points: spec.points(),
                    source,
                    normalization,
                })
                .collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.bins.len()).sum()
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.bins.len()).collect()
    }

    /// All bins, block after block.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flat_map(|b| b.bins.iter().copied())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values().collect()
    }
}

/// Settings for [`Extractor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub descriptor: DescriptorKind,
    pub spec: NeighborhoodSpec,
    pub mapping: MappingKind,
    pub normalization: Normalization,
    #[serde(default)]
    pub reference: ReferenceSource,
    /// Gaussian pre-smoothing before derivatives; `0` disables it.
    #[serde(default)]
    pub smoothing_sigma: f64,
}

impl ExtractConfig {
    pub fn new(descriptor: DescriptorKind, spec: NeighborhoodSpec) -> Self {
        ExtractConfig {
            descriptor,
            spec,
            mapping: descriptor.default_mapping(),
            normalization: Normalization::Percent,
            reference: ReferenceSource::Intensity,
            smoothing_sigma: 0.0,
        }
    }

    pub fn with_mapping(mut self, mapping: MappingKind) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

/// Reusable descriptor extractor: holds the sampling taps and mapping
/// table for one configuration.
#[derive(Debug, Clone)]
pub struct Extractor {
    config: ExtractConfig,
    kernel: SamplingKernel,
    mapping: Mapping,
}

/// Per-pixel inputs a block needs.
struct Needs {
    intensity: bool,
    eg: bool,
    affg: bool,
}

impl Extractor {
    pub fn new(config: ExtractConfig) -> Result<Self> {
        Ok(Extractor {
            kernel: config.spec.kernel(),
            mapping: build_mapping(config.mapping, config.spec.points())?,
            config,
        })
    }

    pub fn config(&self) -> &ExtractConfig {
        &self.config
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    fn needs(&self) -> Needs {
        let sources = self.config.descriptor.blocks();
        let has = |s: CodeSource| sources.contains(&s);
        Needs {
            intensity: has(CodeSource::Lbp)
                || has(CodeSource::RoLbp)
                || (has(CodeSource::RoLagp) && self.config.reference == ReferenceSource::Intensity),
            eg: has(CodeSource::Lgp),
            affg: has(CodeSource::Lagp) || has(CodeSource::RoLagp),
        }
    }

    /// Scans every pixel at least `ceil(R) + 2` from the border and returns
    /// the mapped, normalized block histograms.
    pub fn extract(&self, img: &GrayImage) -> Result<Descriptor> {
        let spec = &self.config.spec;
        let margin = spec.pipeline_margin();
        let (w, h) = (img.width(), img.height());
        if w <= 2 * margin || h <= 2 * margin {
            return Err(Error::EmptyValidRegion {
                width: w,
                height: h,
                radius: spec.radius(),
            });
        }
        let needs = self.needs();
        let fields = if needs.eg || needs.affg {
            Some(GradientFields::compute(img, self.config.smoothing_sigma)?)
        } else {
            None
        };
        let eg = fields.as_ref().filter(|_| needs.eg).map(|f| &f.eg);
        let affg = fields.as_ref().filter(|_| needs.affg).map(|f| &f.affg_prime);

        let sources = self.config.descriptor.blocks();
        let bin_count = self.mapping.bin_count();
        let p_count = spec.points();

        let counts = (margin..h - margin)
            .into_par_iter()
            .fold(
                || (vec![vec![0u64; bin_count]; sources.len()], PixelScratch::new(p_count)),
                |(mut counts, mut scratch), y| {
                    for x in margin..w - margin {
                        scratch.load(&self.kernel, img, eg, affg, &needs, x, y);
                        for (block, &source) in counts.iter_mut().zip(sources) {
                            let code = self.code(source, &scratch);
                            block[self.mapping.bin(code)] += 1;
                        }
                    }
                    (counts, scratch)
                },
            )
            .map(|(counts, _)| counts)
            .reduce(
                || vec![vec![0u64; bin_count]; sources.len()],
                |mut a, b| {
                    for (ba, bb) in a.iter_mut().zip(&b) {
                        ba.iter_mut().zip(bb).for_each(|(x, y)| *x += y);
                    }
                    a
                },
            );

        let blocks = counts
            .into_iter()
            .zip(sources)
            .map(|(c, &source)| {
                let mut bins: Vec<f64> = c.into_iter().map(|v| v as f64).collect();
                self.config.normalization.apply(&mut bins);
                PatternHistogram {
                    bins,
                    mapping: self.config.mapping,
                    points: p_count,
                    source,
                    normalization: self.config.normalization,
                }
            })
            .collect();
        Ok(Descriptor {
            kind: self.config.descriptor,
            radius: spec.radius(),
            points: p_count,
            mapping: self.config.mapping,
            normalization: self.config.normalization,
            blocks,
        })
    }

    /// Extracts many images in parallel, preserving input order.
    pub fn extract_all(&self, images: &[GrayImage]) -> Result<Vec<Descriptor>> {
        images.par_iter().map(|img| self.extract(img)).collect()
    }

    fn code(&self, source: CodeSource, s: &PixelScratch) -> u32 {
        match source {
            CodeSource::Lbp => lbp_code(s.center, &s.intensity).value(),
            CodeSource::Lgp => lbp_code(s.eg_center, &s.eg).value(),
            CodeSource::Lagp => lbp_code(s.affg_center, &s.affg).value(),
            CodeSource::RoLbp => {
                let ds = reference_direction(s.center, &s.intensity);
                aligned_code(s.center, &s.intensity, ds).value()
            }
            CodeSource::RoLagp => {
                let ds = match self.config.reference {
                    ReferenceSource::Intensity => reference_direction(s.center, &s.intensity),
                    ReferenceSource::Comparator => reference_direction(s.affg_center, &s.affg),
                };
                aligned_code(s.affg_center, &s.affg, ds).value()
            }
        }
    }
}

struct PixelScratch {
    center: f64,
    intensity: Vec<f64>,
    eg_center: f64,
    eg: Vec<f64>,
    affg_center: f64,
    affg: Vec<f64>,
}

impl PixelScratch {
    fn new(p: usize) -> Self {
        PixelScratch {
            center: 0.0,
            intensity: vec![0.0; p],
            eg_center: 0.0,
            eg: vec![0.0; p],
            affg_center: 0.0,
            affg: vec![0.0; p],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn load(
        &mut self,
        kernel: &SamplingKernel,
        img: &GrayImage,
        eg: Option<&ScalarField>,
        affg: Option<&ScalarField>,
        needs: &Needs,
        x: usize,
        y: usize,
    ) {
        if needs.intensity {
            self.center = img.get(x, y);
            kernel.sample_into(img, x, y, &mut self.intensity);
        }
        if let Some(f) = eg {
            self.eg_center = crate::raster::Raster::raw(f, x, y);
            kernel.sample_into(f, x, y, &mut self.eg);
        }
        if let Some(f) = affg {
            self.affg_center = crate::raster::Raster::raw(f, x, y);
            kernel.sample_into(f, x, y, &mut self.affg);
        }
    }
}

/// One-shot extraction with the default reference source and no smoothing.
pub fn extract(
    img: &GrayImage,
    spec: &NeighborhoodSpec,
    descriptor: DescriptorKind,
    mapping: MappingKind,
    normalization: Normalization,
) -> Result<Descriptor> {
    Extractor::new(
        ExtractConfig::new(descriptor, *spec)
            .with_mapping(mapping)
            .with_normalization(normalization),
    )?
    .extract(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(r: f64, p: usize) -> NeighborhoodSpec {
        NeighborhoodSpec::new(r, p).unwrap()
    }

    #[test]
    fn constant_image_fills_all_ones_bin() {
        let img = GrayImage::from_fn(12, 12, |_, _| 9.0).unwrap();
        let d = extract(
            &img,
            &spec(1.0, 8),
            DescriptorKind::Lbp,
            MappingKind::Original,
            Normalization::UnitSum,
        )
        .unwrap();
        assert_eq!(d.dimension(), 256);
        assert_eq!(d.blocks[0].bins[255], 1.0);
        assert_eq!(d.values().sum::<f64>(), 1.0);
    }

    #[test]
    fn aglbp_block_lengths() {
        let img = GrayImage::from_fn(20, 20, |x, y| ((x * 7 + y * 3) % 11) as f64).unwrap();
        for (r, p) in [(1.0, 8), (2.0, 12)] {
            let d = extract(
                &img,
                &spec(r, p),
                DescriptorKind::Aglbp,
                MappingKind::Ro,
                Normalization::Percent,
            )
            .unwrap();
            assert_eq!(d.block_lengths(), vec![1 << p, 1 << p]);
            assert_eq!(d.blocks[0].source, CodeSource::RoLbp);
            assert_eq!(d.blocks[1].source, CodeSource::RoLagp);
            for b in &d.blocks {
                assert!((b.bins.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn counts_match_valid_pixel_total() {
        let img = GrayImage::from_fn(15, 13, |x, y| ((x * x + 3 * y) % 17) as f64).unwrap();
        let d = extract(
            &img,
            &spec(1.0, 8),
            DescriptorKind::MiAg,
            MappingKind::Riu2,
            Normalization::Count,
        )
        .unwrap();
        // margin 3: (15 - 6) * (13 - 6)
        for b in &d.blocks {
            assert_eq!(b.bins.iter().sum::<f64>(), 63.0);
            assert_eq!(b.bins.len(), 10);
        }
        assert_eq!(d.blocks[0].source, CodeSource::Lagp);
        assert_eq!(d.blocks[1].source, CodeSource::Lbp);
    }

    #[test]
    fn empty_valid_region() {
        let img = GrayImage::from_fn(6, 40, |_, _| 0.0).unwrap();
        assert!(matches!(
            extract(
                &img,
                &spec(1.0, 8),
                DescriptorKind::Lbp,
                MappingKind::Original,
                Normalization::Percent
            ),
            Err(Error::EmptyValidRegion { .. })
        ));
    }

    #[test]
    fn names_round_trip() {
        for k in DescriptorKind::ALL {
            assert_eq!(k.as_str().parse::<DescriptorKind>().unwrap(), k);
        }
        assert_eq!("mi_ag".parse::<DescriptorKind>().unwrap(), DescriptorKind::MiAg);
        assert_eq!("aglbp".parse::<DescriptorKind>().unwrap(), DescriptorKind::Aglbp);
        assert!("foo".parse::<DescriptorKind>().is_err());
        assert_eq!("unit-sum".parse::<Normalization>().unwrap(), Normalization::UnitSum);
    }
}
