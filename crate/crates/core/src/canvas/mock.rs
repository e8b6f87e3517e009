use async_trait::async_trait;
use image::{Rgba, RgbaImage};

use super::{CanvasError, OutpaintRequest, OutpaintingProvider, DEFAULT_SIDE, MASK_UNFILLED};

/// Deterministic in-process provider: fills every masked pixel with the
/// rounded mean color of the unmasked ones and leaves the rest untouched.
#[derive(Debug, Clone)]
pub struct MockProvider {
    max_side: u32,
    fail_with: Option<String>,
}

impl Default for MockProvider {
    fn default() -> Self {
        Self { max_side: DEFAULT_SIDE * 2, fail_with: None }
    }
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_max_side(mut self, max_side: u32) -> Self {
        self.max_side = max_side;
        self
    }

    /// Every call fails with `reason`.
    pub fn failing(reason: impl Into<String>) -> Self {
        Self { fail_with: Some(reason.into()), ..Self::default() }
    }

    /// The pure fill used by [`OutpaintingProvider::outpaint`].
    pub fn fill(request: &OutpaintRequest) -> RgbaImage {
        let mut sums = [0u64; 3];
        let mut n = 0u64;
        for (p, m) in request.base.pixels().zip(request.mask.pixels()) {
            if m[0] != MASK_UNFILLED {
                for c in 0..3 {
                    sums[c] += p[c] as u64;
                }
                n += 1;
            }
        }
        let fill = if n == 0 {
            Rgba([255, 255, 255, 255])
        } else {
            let avg = |s: u64| ((s + n / 2) / n) as u8;
            Rgba([avg(sums[0]), avg(sums[1]), avg(sums[2]), 255])
        };
        let mut out = request.base.clone();
        for (p, m) in out.pixels_mut().zip(request.mask.pixels()) {
            if m[0] == MASK_UNFILLED {
                *p = fill;
            }
        }
        out
    }
}

#[async_trait]
impl OutpaintingProvider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn max_side(&self) -> u32 {
        self.max_side
    }

    async fn outpaint(&self, request: &OutpaintRequest) -> Result<RgbaImage, CanvasError> {
        if let Some(reason) = &self.fail_with {
            return Err(CanvasError::Provider(reason.clone()));
        }
        if request.base.dimensions() != request.mask.dimensions() {
            return Err(CanvasError::Provider("base and mask sizes differ".into()));
        }
        Ok(Self::fill(request))
    }
}
