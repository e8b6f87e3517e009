use image::RgbaImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{BoundingBox, GeometryError};
use crate::ingestion::Detection;
use crate::taxonomy::Category;

/// Default minimum crop side in pixels.
pub const DEFAULT_MIN_SIDE: u32 = 32;

/// A stored crop as registered in the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectCrop {
    pub detection_id: String,
    /// Integer-aligned rectangle inside the source image.
    pub crop_box: BoundingBox,
    pub width: u32,
    pub height: u32,
    pub pixel_digest: String,
    /// Relative to the catalog root.
    pub storage_path: String,
}

/// Pixels cut from a source image, not yet stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CropImage {
    pub detection_id: String,
    pub category: Category,
    pub crop_box: BoundingBox,
    pub pixels: RgbaImage,
    pub pixel_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CropSkip {
    #[error("too small ({width}x{height} < {min_side})")]
    TooSmall { width: u32, height: u32, min_side: u32 },
    #[error("empty after clamp")]
    Empty,
}

impl CropSkip {
    pub fn reason(&self) -> &'static str {
        match self {
            CropSkip::TooSmall { .. } => "too small",
            CropSkip::Empty => "empty after clamp",
        }
    }
}

/// Crop rectangle `(x, y, width, height)` for `bbox` on a `width x height`
/// image: clamped, then rounded outward to whole pixels.
pub fn crop_rect(bbox: &BoundingBox, width: u32, height: u32, min_side: u32) -> Result<(u32, u32, u32, u32), CropSkip> {
    let clamped = match bbox.clamp(width as f64, height as f64) {
        Ok(b) => b.round_outward(),
        Err(GeometryError::EmptyAfterClamp | GeometryError::InvalidDimensions { .. }) => return Err(CropSkip::Empty),
        Err(GeometryError::InvalidBox { .. }) => return Err(CropSkip::Empty),
    };
    let x = clamped.x_min() as u32;
    let y = clamped.y_min() as u32;
    let w = (clamped.x_max() as u32).min(width) - x;
    let h = (clamped.y_max() as u32).min(height) - y;
    if w < min_side || h < min_side {
        return Err(CropSkip::TooSmall { width: w, height: h, min_side });
    }
    Ok((x, y, w, h))
}

/// SHA-256 over big-endian width, height and the raw RGBA8 bytes.
pub fn pixel_digest(pixels: &RgbaImage) -> String {
    let mut h = Sha256::new();
    h.update(pixels.width().to_be_bytes());
    h.update(pixels.height().to_be_bytes());
    h.update(pixels.as_raw());
    hex::encode(h.finalize())
}

/// Copies the detection's region out of `image` bit for bit.
pub fn extract_crop(image: &RgbaImage, d: &Detection, min_side: u32) -> Result<CropImage, CropSkip> {
    let (x, y, w, h) = crop_rect(&d.bbox, image.width(), image.height(), min_side)?;
    let pixels = image::imageops::crop_imm(image, x, y, w, h).to_image();
    Ok(CropImage {
        detection_id: d.id.clone(),
        category: d.category,
        crop_box: BoundingBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64).expect("non-negative rectangle"),
        pixel_digest: pixel_digest(&pixels),
        pixels,
    })
}
