//! Binary pattern codes, bin mappings, histograms and descriptor extraction.

mod codes;
mod descriptor;
mod mapping;
pub mod serialize;

pub use codes::{aligned_code, lbp_code, reference_direction, ro_code, scalar_code, sign_bit, PatternCode};
pub use descriptor::{
    extract, CodeSource, Descriptor, DescriptorKind, ExtractConfig, Extractor, Normalization, PatternHistogram,
    ReferenceSource,
};
pub use mapping::{build_mapping, min_rotation, transitions, Mapping, MappingKind};
