//! Rendering scalar maps as false-color overlays on RGB images.

mod colormap;
mod resample;

use std::path::Path;

use image::ImageEncoder as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use colormap::{colorize, jet, JET};
pub use resample::{resize_rgb, upsample_bilinear};

pub const DEFAULT_OPACITY: f64 = 0.5;
pub const DEFAULT_DISPLAY_SIZE: (u32, u32) = (224, 224);

/// `[H, W]` map with every value in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T> {
    map: Tensor<T>,
}

impl<T: Scalar> Heatmap<T> {
    /// Wrap a rank-2 map, clamping values into [0, 1].
    pub fn new(map: Tensor<T>) -> Result<Self> {
        if map.rank() != 2 {
            return Err(Error::Dimension(format!(
                "heatmap must be [H, W], got {:?}",
                map.shape()
            )));
        }
        let map = map.map(|v| v.max(T::zero()).min(T::one()))?;
        Ok(Heatmap { map })
    }

    pub fn map(&self) -> &Tensor<T> {
        &self.map
    }
}

/// Min-max normalize to [0, 1]. A constant map becomes all zeros.
pub fn to_heatmap<T: Scalar>(map: &Tensor<T>) -> Result<Heatmap<T>> {
    let lo = map.min_value().to_wide();
    let hi = map.max_value().to_wide();
    let range = hi - lo;
    let normalized = if range > 0.0 {
        map.map(|v| T::from_wide((v.to_wide() - lo) / range))?
    } else {
        Tensor::zeros(map.shape().to_vec())?
    };
    Heatmap::new(normalized)
}

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image(format!("empty image {width}x{height}")));
        }
        let expected = 3 * width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::Image(format!(
                "{width}x{height} RGB image needs {expected} bytes, got {}",
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Per-channel `round(opacity * heat + (1 - opacity) * base)`.
pub fn composite(base: &RgbImage, heat: &RgbImage, opacity: f64) -> Result<RgbImage> {
    if !(0.0..=1.0).contains(&opacity) {
        return Err(Error::Parameter(format!(
            "opacity {opacity} outside [0, 1]"
        )));
    }
    if (base.width, base.height) != (heat.width, heat.height) {
        return Err(Error::Dimension(format!(
            "base image is {}x{} but heatmap is {}x{}",
            base.width, base.height, heat.width, heat.height
        )));
    }
    let pixels = base
        .pixels
        .iter()
        .zip(&heat.pixels)
        .map(|(&b, &h)| (opacity * h as f64 + (1.0 - opacity) * b as f64).round() as u8)
        .collect();
    RgbImage::new(base.width, base.height, pixels)
}

/// Place images side by side, left to right. All must share a height.
pub fn hconcat(images: &[RgbImage]) -> Result<RgbImage> {
    let first = images
        .first()
        .ok_or_else(|| Error::Parameter("nothing to concatenate".into()))?;
    let height = first.height;
    if let Some(bad) = images.iter().find(|i| i.height != height) {
        return Err(Error::Dimension(format!(
            "image heights {} and {} differ",
            height, bad.height
        )));
    }
    let width: u32 = images.iter().map(|i| i.width).sum();
    let mut pixels = Vec::with_capacity(3 * width as usize * height as usize);
    for y in 0..height as usize {
        for img in images {
            let row = 3 * img.width as usize;
            pixels.extend_from_slice(&img.pixels[y * row..(y + 1) * row]);
        }
    }
    RgbImage::new(width, height, pixels)
}

/// Decode an image file; grayscale and alpha inputs are converted to RGB.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    let rgb = decoded.to_rgb8();
    RgbImage::new(rgb.width(), rgb.height(), rgb.into_raw())
}

/// Encode as an 8-bit RGB PNG.
pub fn save_png(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(
            &image.pixels,
            image.width,
            image.height,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
