//! Raster images and single-channel maps.
//!
//! Pixel `(x, y)` (column, row) lives at index `y * width + x`. Continuous
//! coordinates put the center of pixel `(x, y)` at `(x + 0.5, y + 0.5)`,
//! with x growing rightward and y growing downward.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use crate::error::{Error, Result};

/// W×H grid of RGB triples with every channel in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

/// W×H grid of reals in [0, 1] (alpha layers, simulated intensity, densities).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    if width * height != len {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} grid needs {} values, got {len}",
            width * height
        )));
    }
    Ok(())
}

fn check_unit(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{what} value {v} outside [0, 1]")))
    }
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        for p in &pixels {
            for &c in p {
                check_unit(c, "channel")?;
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Build an image, clamping every channel into [0, 1]. Used for values
    /// produced by convex combinations where rounding can leave the range by
    /// an ulp.
    pub(crate) fn from_clamped(width: usize, height: usize, mut pixels: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(width * height, pixels.len());
        for p in &mut pixels {
            for c in p.iter_mut() {
                *c = c.clamp(0.0, 1.0);
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

impl ChannelMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        for &v in &values {
            check_unit(v, "channel map")?;
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub(crate) fn from_clamped(width: usize, height: usize, mut values: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, values.len());
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn same_shape(&self, other: &ChannelMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Map a unit value to a byte, rounding half up.
pub fn quantize_u8(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0) + 0.5).floor() as u8
}

/// Load a PNG as an RGB image normalized to [0, 1].
///
/// 8- and 16-bit RGB, RGBA, gray and gray+alpha inputs are accepted. Gray is
/// replicated to RGB; alpha is dropped with a warning.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let unreadable = |reason: String| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| unreadable(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?;
    let img = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: u.to_string(),
        },
        other => unreadable(other.to_string()),
    })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::ZeroDimension);
    }
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<[f64; 3]> = match &img {
        DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_)
        | DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_) => {
            if img.color().has_alpha() {
                log::warn!("{}: alpha channel discarded", path.display());
            }
            img.to_rgb8()
                .pixels()
                .map(|p| p.0.map(|c| f64::from(c) / 255.0))
                .collect()
        }
        DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_)
        | DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_) => {
            if img.color().has_alpha() {
                log::warn!("{}: alpha channel discarded", path.display());
            }
            img.to_rgb16()
                .pixels()
                .map(|p| p.0.map(|c| f64::from(c) / 65535.0))
                .collect()
        }
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!("color type {:?}", other.color()),
            })
        }
    };
    RasterImage::new(width, height, pixels)
}

fn unwritable(path: &Path, e: impl ToString) -> Error {
    Error::UnwritablePath {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Save as 8-bit grayscale PNG, `round(255 v)` with halves rounded up.
pub fn save_channel(map: &ChannelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = map.values.iter().map(|&v| quantize_u8(v)).collect();
    let img = GrayImage::from_raw(map.width as u32, map.height as u32, bytes)
        .ok_or_else(|| Error::DimensionMismatch("channel buffer size".into()))?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| unwritable(path, e))
}

/// Save as 8-bit RGB PNG with the same rounding as [`save_channel`].
pub fn save_rgb(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = image
        .pixels
        .iter()
        .flat_map(|p| p.map(quantize_u8))
        .collect();
    let img = RgbImage::from_raw(image.width as u32, image.height as u32, bytes)
        .ok_or_else(|| Error::DimensionMismatch("rgb buffer size".into()))?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| unwritable(path, e))
}
