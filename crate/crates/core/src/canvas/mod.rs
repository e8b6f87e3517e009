//! Canvas composition: placing scaled crops on a square white canvas,
//! rendering the base image and outpainting mask, and handing both to an
//! outpainting provider.
//!
//! Mask convention: 255 marks pixels the provider must fill (white space),
//! 0 marks pixels covered by a placement.

mod http;
mod mock;

use std::collections::HashSet;

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use image::{GrayImage, Luma, Rgba, RgbaImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpOutpaintingProvider, OutpaintWireRequest, OutpaintWireResponse};
pub use mock::MockProvider;

pub const DEFAULT_SIDE: u32 = 1024;
pub const MASK_UNFILLED: u8 = 255;
pub const MASK_FILLED: u8 = 0;
pub const BACKGROUND: Rgba<u8> = Rgba([255, 255, 255, 255]);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanvasError {
    #[error("canvas side must be positive")]
    InvalidSide,
    #[error("scale must be a positive finite number")]
    InvalidScale,
    #[error("placement of {detection_id} ({width}x{height} at {x},{y}) extends past the {side}px canvas")]
    OutOfBounds { detection_id: String, x: u32, y: u32, width: u32, height: u32, side: u32 },
    #[error("unknown crop {0:?}")]
    UnknownCrop(String),
    #[error("missing crop bytes for {detection_id}: {reason}")]
    MissingCrop { detection_id: String, reason: String },
    #[error("nothing placed")]
    NothingPlaced,
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("canvas side {side} exceeds provider maximum {max}")]
    OversizedCanvas { side: u32, max: u32 },
    #[error("provider timed out")]
    Timeout,
    #[error("provider failure: {0}")]
    Provider(String),
    #[error("provider contract violation: {0}")]
    ContractViolation(String),
}

/// Where crop dimensions and pixels come from.
pub trait CropSource: Send + Sync {
    fn crop_dimensions(&self, detection_id: &str) -> Option<(u32, u32)>;
    fn crop_pixels(&self, detection_id: &str) -> Result<RgbaImage, String>;
}

impl CropSource for crate::catalog::Catalog {
    fn crop_dimensions(&self, detection_id: &str) -> Option<(u32, u32)> {
        self.crop(detection_id).map(|c| (c.width, c.height))
    }

    fn crop_pixels(&self, detection_id: &str) -> Result<RgbaImage, String> {
        self.read_crop_pixels(detection_id).map_err(|e| e.to_string())
    }
}

/// Crops held in memory, keyed by detection id.
#[derive(Debug, Clone, Default)]
pub struct InMemoryCrops(pub std::collections::HashMap<String, RgbaImage>);

impl CropSource for InMemoryCrops {
    fn crop_dimensions(&self, detection_id: &str) -> Option<(u32, u32)> {
        self.0.get(detection_id).map(|c| c.dimensions())
    }

    fn crop_pixels(&self, detection_id: &str) -> Result<RgbaImage, String> {
        self.0.get(detection_id).cloned().ok_or_else(|| "not found".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub detection_id: String,
    pub x: u32,
    pub y: u32,
    pub scale: f64,
    /// Scaled size on the canvas.
    pub width: u32,
    pub height: u32,
}

impl Placement {
    fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && py >= self.y && px - self.x < self.width && py - self.y < self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasComposition {
    pub side: u32,
    /// Later placements render on top.
    pub placements: Vec<Placement>,
    pub prompt: String,
}

impl CanvasComposition {
    pub fn new(side: u32) -> Result<Self, CanvasError> {
        if side == 0 {
            return Err(CanvasError::InvalidSide);
        }
        Ok(Self { side, placements: Vec::new(), prompt: String::new() })
    }

    pub fn with_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.prompt = prompt.into();
        self
    }

    /// Distinct detection ids in first-placement order.
    pub fn used_objects(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.placements
            .iter()
            .filter(|p| seen.insert(p.detection_id.as_str()))
            .map(|p| p.detection_id.clone())
            .collect()
    }

    /// Checks everything generation needs: side, at least one placement,
    /// every placement inside the canvas, a non-empty prompt.
    pub fn validate(&self) -> Result<(), CanvasError> {
        if self.side == 0 {
            return Err(CanvasError::InvalidSide);
        }
        if self.placements.is_empty() {
            return Err(CanvasError::NothingPlaced);
        }
        for p in &self.placements {
            check_bounds(self.side, p)?;
        }
        if self.prompt.trim().is_empty() {
            return Err(CanvasError::EmptyPrompt);
        }
        Ok(())
    }
}

/// Scaled size of a `width x height` crop, rounded to whole pixels.
pub fn scaled_size(width: u32, height: u32, scale: f64) -> Result<(u32, u32), CanvasError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CanvasError::InvalidScale);
    }
    let w = (width as f64 * scale).round();
    let h = (height as f64 * scale).round();
    if w < 1.0 || h < 1.0 || w > u32::MAX as f64 || h > u32::MAX as f64 {
        return Err(CanvasError::InvalidScale);
    }
    Ok((w as u32, h as u32))
}

fn check_bounds(side: u32, p: &Placement) -> Result<(), CanvasError> {
    let fits = p.width >= 1
        && p.height >= 1
        && (p.x as u64 + p.width as u64) <= side as u64
        && (p.y as u64 + p.height as u64) <= side as u64;
    if fits {
        Ok(())
    } else {
        Err(CanvasError::OutOfBounds {
            detection_id: p.detection_id.clone(),
            x: p.x,
            y: p.y,
            width: p.width,
            height: p.height,
            side,
        })
    }
}

/// Returns `comp` with one more placement on top.
pub fn place(
    comp: &CanvasComposition,
    source: &dyn CropSource,
    detection_id: &str,
    x: u32,
    y: u32,
    scale: f64,
) -> Result<CanvasComposition, CanvasError> {
    let (w, h) =
        source.crop_dimensions(detection_id).ok_or_else(|| CanvasError::UnknownCrop(detection_id.to_string()))?;
    let (width, height) = scaled_size(w, h, scale)?;
    let placement = Placement { detection_id: detection_id.to_string(), x, y, scale, width, height };
    check_bounds(comp.side, &placement)?;
    let mut next = comp.clone();
    next.placements.push(placement);
    Ok(next)
}

/// Nearest-neighbor source index for destination index `d` when mapping a
/// source extent `src` onto `dst` pixels (pixel-center sampling).
pub fn nearest_index(d: u32, src: u32, dst: u32) -> u32 {
    let i = ((2 * d as u64 + 1) * src as u64) / (2 * dst as u64);
    (i as u32).min(src - 1)
}

/// Scales `crop` to `width x height` with nearest-neighbor sampling.
pub fn scale_nearest(crop: &RgbaImage, width: u32, height: u32) -> RgbaImage {
    RgbaImage::from_fn(width, height, |x, y| {
        *crop.get_pixel(nearest_index(x, crop.width(), width), nearest_index(y, crop.height(), height))
    })
}

/// White canvas with every placement composited in order, plus the mask of
/// pixels no placement covers.
pub fn render_base(comp: &CanvasComposition, source: &dyn CropSource) -> Result<(RgbaImage, GrayImage), CanvasError> {
    if comp.side == 0 {
        return Err(CanvasError::InvalidSide);
    }
    if comp.placements.is_empty() {
        return Err(CanvasError::NothingPlaced);
    }
    let mut base = RgbaImage::from_pixel(comp.side, comp.side, BACKGROUND);
    let mut mask = GrayImage::from_pixel(comp.side, comp.side, Luma([MASK_UNFILLED]));
    for p in &comp.placements {
        check_bounds(comp.side, p)?;
        let crop = source
            .crop_pixels(&p.detection_id)
            .map_err(|reason| CanvasError::MissingCrop { detection_id: p.detection_id.clone(), reason })?;
        if crop.width() == 0 || crop.height() == 0 {
            return Err(CanvasError::MissingCrop { detection_id: p.detection_id.clone(), reason: "empty crop".into() });
        }
        let scaled = scale_nearest(&crop, p.width, p.height);
        image::imageops::replace(&mut base, &scaled, p.x as i64, p.y as i64);
        for y in p.y..p.y + p.height {
            for x in p.x..p.x + p.width {
                mask.put_pixel(x, y, Luma([MASK_FILLED]));
            }
        }
    }
    Ok((base, mask))
}

/// Whether any placement covers canvas pixel `(x, y)`.
pub fn covered(comp: &CanvasComposition, x: u32, y: u32) -> bool {
    comp.placements.iter().any(|p| p.contains(x, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutpaintRequest {
    pub base: RgbaImage,
    pub mask: GrayImage,
    pub prompt: String,
    pub side: u32,
}

#[async_trait]
pub trait OutpaintingProvider: Send + Sync {
    fn id(&self) -> &str;

    /// Largest canvas side the provider accepts.
    fn max_side(&self) -> u32;

    async fn outpaint(&self, request: &OutpaintRequest) -> Result<RgbaImage, CanvasError>;
}

/// Validates, renders and sends the composition to `provider`. The result
/// is guaranteed to be `side x side`.
pub async fn generate(
    provider: &dyn OutpaintingProvider,
    comp: &CanvasComposition,
    source: &dyn CropSource,
) -> Result<RgbaImage, CanvasError> {
    comp.validate()?;
    if comp.side > provider.max_side() {
        return Err(CanvasError::OversizedCanvas { side: comp.side, max: provider.max_side() });
    }
    let (base, mask) = render_base(comp, source)?;
    let request = OutpaintRequest { base, mask, prompt: comp.prompt.clone(), side: comp.side };
    let image = provider.outpaint(&request).await?;
    if image.dimensions() != (comp.side, comp.side) {
        return Err(CanvasError::ContractViolation(format!(
            "expected {0}x{0}, got {1}x{2}",
            comp.side,
            image.width(),
            image.height()
        )));
    }
    Ok(image)
}

/// A finished generation as stored in the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedImage {
    pub job_id: String,
    pub session_id: Option<String>,
    pub composition: CanvasComposition,
    pub provider_id: String,
    /// Relative to the catalog root.
    pub image_path: String,
    pub width: u32,
    pub height: u32,
    pub created_at: DateTime<Utc>,
    pub used_objects: Vec<String>,
}

impl GeneratedImage {
    pub fn new(
        job_id: &str,
        session_id: Option<&str>,
        composition: &CanvasComposition,
        provider_id: &str,
        created_at: DateTime<Utc>,
    ) -> Self {
        Self {
            job_id: job_id.to_string(),
            session_id: session_id.map(str::to_string),
            composition: composition.clone(),
            provider_id: provider_id.to_string(),
            image_path: format!("generated/{job_id}.png"),
            width: composition.side,
            height: composition.side,
            created_at,
            used_objects: composition.used_objects(),
        }
    }
}

pub fn encode_png(image: &RgbaImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    image.write_to(&mut out, image::ImageFormat::Png).expect("png encoding to memory");
    out.into_inner()
}

pub fn encode_gray_png(image: &GrayImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    image.write_to(&mut out, image::ImageFormat::Png).expect("png encoding to memory");
    out.into_inner()
}

#[cfg(test)]
pub(crate) mod tests;
