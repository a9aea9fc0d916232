use std::fs;
use std::io::Write;
use std::path::Path;

use image::DynamicImage;

use super::GrayImage;
use crate::error::{Error, Result};

/// Raw channel samples of a decoded raster.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

/// A decoded, interleaved multi-channel raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRaster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub samples: Samples,
}

/// Converts 1- or 3-channel 8/16-bit rasters to intensities in `[0, 255]`.
///
/// Three channels use the luminance weights `0.299 R + 0.587 G + 0.114 B`.
/// Sixteen-bit samples are rescaled by `255 / 65535`.
pub fn to_grayscale(raster: &ChannelRaster) -> Result<GrayImage> {
    let (scale, values): (f64, Vec<f64>) = match &raster.samples {
        Samples::U8(v) => (1.0, v.iter().map(|&s| s as f64).collect()),
        Samples::U16(v) => (255.0 / 65535.0, v.iter().map(|&s| s as f64).collect()),
    };
    let pixels = raster.width * raster.height;
    if values.len() != pixels * raster.channels {
        return Err(Error::Dimension(format!(
            "{}x{}x{} raster needs {} samples, got {}",
            raster.width,
            raster.height,
            raster.channels,
            pixels * raster.channels,
            values.len()
        )));
    }
    let data = match raster.channels {
        1 => {
            if scale == 1.0 {
                values
            } else {
                values.iter().map(|v| v * scale).collect()
            }
        }
        3 => values
            .chunks_exact(3)
            .map(|c| (0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]) * scale)
            .collect(),
        n => {
            return Err(Error::Format(format!(
                "{n}-channel rasters are not supported; expected 1 (gray) or 3 (RGB)"
            )))
        }
    };
    GrayImage::new(raster.width, raster.height, data)
}

/// Decodes PGM/PPM (8 or 16 bit) and PNG files into a [`GrayImage`].
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_gray(&bytes).map_err(|e| match e {
        Error::Format(message) => Error::Data {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Decodes an in-memory PGM/PPM/PNG file.
pub fn read_gray(bytes: &[u8]) -> Result<GrayImage> {
    let decoded = image::load_from_memory(bytes).map_err(|e| Error::Format(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, samples) = match decoded {
        DynamicImage::ImageLuma8(b) => (1, Samples::U8(b.into_raw())),
        DynamicImage::ImageLuma16(b) => (1, Samples::U16(b.into_raw())),
        DynamicImage::ImageRgb8(b) => (3, Samples::U8(b.into_raw())),
        DynamicImage::ImageRgb16(b) => (3, Samples::U16(b.into_raw())),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => (2, Samples::U8(vec![])),
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageRgba16(_) => (4, Samples::U8(vec![])),
        other => return Err(Error::Format(format!("unsupported sample layout {:?}", other.color()))),
    };
    if matches!(&samples, Samples::U8(v) if v.is_empty()) {
        return Err(Error::Format(format!(
            "{channels}-channel images are not supported; expected gray or RGB"
        )));
    }
    to_grayscale(&ChannelRaster {
        width,
        height,
        channels,
        samples,
    })
}

/// Writes an 8-bit binary PGM, rounding and clamping intensities to `[0, 255]`.
pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    buf.extend(img.data().iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_channel_is_identity() {
        let r = ChannelRaster {
            width: 2,
            height: 2,
            channels: 1,
            samples: Samples::U8(vec![0, 10, 200, 255]),
        };
        assert_eq!(to_grayscale(&r).unwrap().data(), &[0.0, 10.0, 200.0, 255.0]);
    }

    #[test]
    fn luminance_weights() {
        let r = ChannelRaster {
            width: 2,
            height: 1,
            channels: 3,
            samples: Samples::U8(vec![255, 255, 255, 100, 200, 50]),
        };
        let g = to_grayscale(&r).unwrap();
        assert!((g.get(0, 0) - 255.0).abs() < 1e-9);
        assert!((g.get(1, 0) - 153.0).abs() < 1e-9);
    }

    #[test]
    fn sixteen_bit_is_rescaled() {
        let r = ChannelRaster {
            width: 2,
            height: 1,
            channels: 1,
            samples: Samples::U16(vec![0, 65535]),
        };
        assert_eq!(to_grayscale(&r).unwrap().data(), &[0.0, 255.0]);
    }

    #[test]
    fn unsupported_channel_count() {
        let r = ChannelRaster {
            width: 1,
            height: 1,
            channels: 2,
            samples: Samples::U8(vec![1, 2]),
        };
        assert!(matches!(to_grayscale(&r), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_round_trip_and_16_bit_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as f64).unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&img, &path).unwrap();
        assert_eq!(load_gray(&path).unwrap(), img);

        let mut wide = b"P5\n2 1\n65535\n".to_vec();
        wide.extend_from_slice(&[0xff, 0xff, 0x00, 0x00]);
        assert_eq!(read_gray(&wide).unwrap().data(), &[255.0, 0.0]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_gray("/nonexistent/x.pgm"), Err(Error::Io { .. })));
    }
}
