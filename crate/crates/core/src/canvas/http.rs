use std::time::Duration;

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use image::RgbaImage;
use serde::{Deserialize, Serialize};

use super::{encode_gray_png, encode_png, CanvasError, OutpaintRequest, OutpaintingProvider};

/// Body of `POST {endpoint}/outpaint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutpaintWireRequest {
    pub prompt: String,
    pub size: u32,
    /// Base64 PNG, RGBA, `size x size`.
    pub image: String,
    /// Base64 PNG, 8-bit grayscale; 255 marks pixels to fill.
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutpaintWireResponse {
    /// Base64 PNG.
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
}

impl OutpaintWireRequest {
    pub fn from_request(req: &OutpaintRequest) -> Self {
        Self {
            prompt: req.prompt.clone(),
            size: req.side,
            image: STANDARD.encode(encode_png(&req.base)),
            mask: STANDARD.encode(encode_gray_png(&req.mask)),
        }
    }

    pub fn decode(&self) -> Result<OutpaintRequest, String> {
        let base = decode_png(&self.image)?.to_rgba8();
        let mask = decode_png(&self.mask)?.to_luma8();
        if base.dimensions() != (self.size, self.size) || mask.dimensions() != (self.size, self.size) {
            return Err(format!("image and mask must be {0}x{0}", self.size));
        }
        Ok(OutpaintRequest { base, mask, prompt: self.prompt.clone(), side: self.size })
    }
}

pub(crate) fn decode_png(b64: &str) -> Result<image::DynamicImage, String> {
    let bytes = STANDARD.decode(b64).map_err(|e| format!("bad base64: {e}"))?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| format!("bad png: {e}"))
}

/// Client for an external outpainting service speaking the wire format
/// above.
#[derive(Debug, Clone)]
pub struct HttpOutpaintingProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::Client,
    timeout: Duration,
    max_side: u32,
}

impl HttpOutpaintingProvider {
    pub fn new(
        endpoint: &str,
        api_key: Option<String>,
        client: reqwest::Client,
        timeout: Duration,
        max_side: u32,
    ) -> Self {
        Self { endpoint: endpoint.trim_end_matches('/').to_string(), api_key, client, timeout, max_side }
    }
}

#[async_trait]
impl OutpaintingProvider for HttpOutpaintingProvider {
    fn id(&self) -> &str {
        &self.endpoint
    }

    fn max_side(&self) -> u32 {
        self.max_side
    }

    async fn outpaint(&self, request: &OutpaintRequest) -> Result<RgbaImage, CanvasError> {
        let body = OutpaintWireRequest::from_request(request);
        let mut rb = self.client.post(format!("{}/outpaint", self.endpoint)).timeout(self.timeout).json(&body);
        if let Some(key) = &self.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = rb.send().await.map_err(|e| {
            if e.is_timeout() {
                CanvasError::Timeout
            } else {
                CanvasError::Provider(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().await.unwrap_or_default();
            return Err(CanvasError::Provider(format!("status {}: {}", status.as_u16(), text.trim())));
        }
        let wire: OutpaintWireResponse = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                CanvasError::Timeout
            } else {
                CanvasError::ContractViolation(e.to_string())
            }
        })?;
        Ok(decode_png(&wire.image).map_err(CanvasError::ContractViolation)?.to_rgba8())
    }
}
