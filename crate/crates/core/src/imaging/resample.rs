//! Bilinear resampling with half-pixel centers.
//!
//! Output cell `i` samples the source at `(i + 0.5) * src / dst - 0.5`,
//! clamped to the valid range, so equal sizes reproduce the input and the
//! borders replicate edge cells.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::RgbImage;

/// Source taps and weight of the second tap for each destination index.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Resize an `[H, W]` map to `[target_h, target_w]`.
pub fn upsample_bilinear<T: Scalar>(
    map: &Tensor<T>,
    target_h: usize,
    target_w: usize,
) -> Result<Tensor<T>> {
    if map.rank() != 2 {
        return Err(Error::Dimension(format!(
            "bilinear resampling needs a [H, W] map, got {:?}",
            map.shape()
        )));
    }
    if target_h == 0 || target_w == 0 {
        return Err(Error::Parameter(format!(
            "target size {target_h}x{target_w} must be positive"
        )));
    }
    let (h, w) = (map.shape()[0], map.shape()[1]);
    let src = map.data();
    let rows = axis_taps(h, target_h);
    let cols = axis_taps(w, target_w);

    let mut out = Vec::with_capacity(target_h * target_w);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            let a = src[y0 * w + x0].to_wide();
            let b = src[y0 * w + x1].to_wide();
            let c = src[y1 * w + x0].to_wide();
            let d = src[y1 * w + x1].to_wide();
            let top = a * (1.0 - fx) + b * fx;
            let bottom = c * (1.0 - fx) + d * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            // keep rounding noise inside the hull of the four taps
            let lo = a.min(b).min(c).min(d);
            let hi = a.max(b).max(c).max(d);
            out.push(T::from_wide(v.clamp(lo, hi)));
        }
    }
    Tensor::new(vec![target_h, target_w], out)
}

/// Bilinear resize of an RGB image, channel by channel.
pub fn resize_rgb(image: &RgbImage, width: u32, height: u32) -> Result<RgbImage> {
    if image.width() == width && image.height() == height {
        return Ok(image.clone());
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    let mut pixels = vec![0u8; 3 * width as usize * height as usize];
    for ch in 0..3 {
        let plane: Vec<f32> = image
            .pixels()
            .iter()
            .skip(ch)
            .step_by(3)
            .map(|&v| v as f32)
            .collect();
        let plane = Tensor::new(vec![h, w], plane)?;
        let resized = upsample_bilinear(&plane, height as usize, width as usize)?;
        for (dst, v) in pixels.iter_mut().skip(ch).step_by(3).zip(resized.data()) {
            *dst = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    RgbImage::new(width, height, pixels)
}
