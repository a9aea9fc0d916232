//! Texture descriptors built from local binary patterns over intensities
//! and affine-gradient fields.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`raster`]: grayscale images, central-difference derivatives and
//!   bilinear sampling on a circle of radius `R` with `P` neighbors;
//! - [`gradient`]: the Euclidean gradient magnitude and the affine
//!   invariants `H`, `J` and the bounded affine gradient;
//! - [`patterns`]: LBP, LGP, LAGP and their rotation-aligned forms, the
//!   `u2`/`ri`/`riu2` mappings and histogram extraction;
//! - [`selection`]: bin selection by training frequency or intraclass
//!   variance;
//! - [`classify`]: chi-square nearest-neighbor classification and the
//!   dataset protocols.
//!
//! ```
//! use aglbp::patterns::{extract, DescriptorKind, MappingKind, Normalization};
//! use aglbp::raster::{GrayImage, NeighborhoodSpec};
//!
//! let img = GrayImage::from_fn(32, 32, |x, y| ((x * 3 + y * 5) % 7) as f64).unwrap();
//! let spec = NeighborhoodSpec::new(1.0, 8).unwrap();
//! let d = extract(&img, &spec, DescriptorKind::Aglbp, MappingKind::Ro, Normalization::Percent).unwrap();
//! assert_eq!(d.block_lengths(), vec![256, 256]);
//! ```

pub mod classify;
pub mod error;
pub mod gradient;
pub mod patterns;
pub mod raster;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/affine-gradient.md")]
    mod affine_gradient {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    mod patterns {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
