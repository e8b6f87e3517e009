//! Client side of the detector protocol (`POST /detect`).
//!
//! The request names the image (by URL or inline base64), carries the
//! taxonomy prompt and the confidence cutoff; the response lists labeled
//! boxes. See `protocol/detector.md` for the field reference.

use std::collections::HashSet;
use std::path::Path;
use std::time::Duration;

use base64::Engine;
use log::warn;
use serde::{Deserialize, Serialize};

use super::retry::{Attempt, RetryPolicy};
use super::{Artwork, Detection, IngestError};
use crate::geometry::BoundingBox;
use crate::taxonomy::{parse_prompt, Taxonomy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImagePayload {
    Url { url: String },
    Inline { base64: String, media_type: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRequest {
    pub artwork_id: String,
    pub image: ImagePayload,
    pub image_width: u32,
    pub image_height: u32,
    pub prompt: String,
    pub cutoff: f64,
}

/// Box fields as sent by the provider, validated after parsing so that bad
/// geometry surfaces as a protocol violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseDetection {
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: ResponseBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub detections: Vec<ResponseDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDetection {
    pub label: String,
    pub confidence: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectOutcome {
    pub detections: Vec<Detection>,
    pub dropped: Vec<DroppedDetection>,
}

#[derive(Debug, Clone)]
pub struct DetectorClient {
    endpoint: String,
    http: reqwest::Client,
    timeout: Duration,
    retry: RetryPolicy,
}

impl DetectorClient {
    /// `endpoint` is the provider base URL; requests go to `{endpoint}/detect`.
    pub fn new(endpoint: &str, http: reqwest::Client, timeout: Duration, retry: RetryPolicy) -> Self {
        Self { endpoint: endpoint.trim_end_matches('/').to_string(), http, timeout, retry }
    }

    pub fn build_request(
        &self,
        artwork: &Artwork,
        local_image: Option<&Path>,
        taxonomy: &Taxonomy,
        cutoff: f64,
    ) -> Result<DetectorRequest, IngestError> {
        let (w, h) = artwork.dimensions().ok_or_else(|| IngestError::UnknownDimensions(artwork.id.clone()))?;
        let image = if let Some(path) = local_image {
            inline(path)?
        } else if artwork.image_ref.starts_with("http://") || artwork.image_ref.starts_with("https://") {
            ImagePayload::Url { url: artwork.image_ref.clone() }
        } else {
            inline(Path::new(artwork.image_ref.strip_prefix("file://").unwrap_or(&artwork.image_ref)))?
        };
        Ok(DetectorRequest {
            artwork_id: artwork.id.clone(),
            image,
            image_width: w,
            image_height: h,
            prompt: taxonomy.build_prompt(),
            cutoff,
        })
    }

    /// Asks the provider for detections on one artwork and validates them.
    ///
    /// A label outside the prompt, a confidence outside [0, 1] or a reversed
    /// box is a protocol violation. Detections below `cutoff` or left empty
    /// after clamping to the image are dropped.
    pub async fn request_detections(
        &self,
        artwork: &Artwork,
        local_image: Option<&Path>,
        taxonomy: &Taxonomy,
        cutoff: f64,
    ) -> Result<DetectOutcome, IngestError> {
        if !(0.0..=1.0).contains(&cutoff) {
            return Err(IngestError::Config(format!("cutoff {cutoff} outside [0, 1]")));
        }
        let request = self.build_request(artwork, local_image, taxonomy, cutoff)?;
        let response = self.send(&request).await?;
        validate_response(&request, response, taxonomy)
    }

    async fn send(&self, request: &DetectorRequest) -> Result<DetectorResponse, IngestError> {
        let url = format!("{}/detect", self.endpoint);
        let result = self
            .retry
            .run(|| async {
                let sent = self.http.post(&url).timeout(self.timeout).json(request).send().await;
                let resp = match sent {
                    Ok(r) => r,
                    Err(e) if e.is_timeout() => return Attempt::Retry(IngestError::Timeout { attempts: 0 }),
                    Err(e) => {
                        return Attempt::Retry(IngestError::Network {
                            url: url.clone(),
                            attempts: 0,
                            reason: e.to_string(),
                        })
                    }
                };
                let status = resp.status();
                if status.is_server_error() || status.as_u16() == 429 {
                    return Attempt::Retry(IngestError::Status { url: url.clone(), status: status.as_u16() });
                }
                if !status.is_success() {
                    return Attempt::Fatal(IngestError::Status { url: url.clone(), status: status.as_u16() });
                }
                match resp.bytes().await {
                    Ok(body) => match serde_json::from_slice::<DetectorResponse>(&body) {
                        Ok(parsed) => Attempt::Done(parsed),
                        Err(e) => Attempt::Fatal(IngestError::MalformedResponse(e.to_string())),
                    },
                    Err(e) if e.is_timeout() => Attempt::Retry(IngestError::Timeout { attempts: 0 }),
                    Err(e) => {
                        Attempt::Retry(IngestError::Network { url: url.clone(), attempts: 0, reason: e.to_string() })
                    }
                }
            })
            .await;
        result.map_err(|(e, n)| match e {
            IngestError::Timeout { .. } => IngestError::Timeout { attempts: n },
            IngestError::Network { url, reason, .. } => IngestError::Network { url, attempts: n, reason },
            other => other,
        })
    }
}

fn inline(path: &Path) -> Result<ImagePayload, IngestError> {
    let bytes = std::fs::read(path)?;
    let media_type = match image::guess_format(&bytes) {
        Ok(f) => f.to_mime_type().to_string(),
        Err(e) => {
            return Err(IngestError::Undecodable { source_ref: path.display().to_string(), reason: e.to_string() })
        }
    };
    Ok(ImagePayload::Inline { base64: base64::engine::general_purpose::STANDARD.encode(bytes), media_type })
}

/// Converts a provider response into detections for `request.artwork_id`.
pub(crate) fn validate_response(
    request: &DetectorRequest,
    response: DetectorResponse,
    taxonomy: &Taxonomy,
) -> Result<DetectOutcome, IngestError> {
    let allowed: HashSet<String> =
        parse_prompt(&request.prompt).map_err(|e| IngestError::Config(format!("prompt: {e}")))?.into_iter().collect();
    let mut outcome = DetectOutcome::default();
    let mut seen = HashSet::new();
    for det in response.detections {
        if !allowed.contains(&det.label) {
            return Err(IngestError::ProtocolViolation(format!("label {:?} is not in the prompt", det.label)));
        }
        if !(0.0..=1.0).contains(&det.confidence) {
            return Err(IngestError::ProtocolViolation(format!("confidence {} outside [0, 1]", det.confidence)));
        }
        let b = det.bbox;
        let bbox = BoundingBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
            .map_err(|e| IngestError::ProtocolViolation(e.to_string()))?;
        if det.confidence < request.cutoff {
            outcome.dropped.push(DroppedDetection {
                label: det.label,
                confidence: det.confidence,
                reason: "below cutoff".into(),
            });
            continue;
        }
        let clamped = match bbox.clamp(request.image_width as f64, request.image_height as f64) {
            Ok(c) => c,
            Err(e) => {
                warn!("dropping {} on {}: {e}", det.label, request.artwork_id);
                outcome.dropped.push(DroppedDetection {
                    label: det.label,
                    confidence: det.confidence,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let detection = Detection::new(&request.artwork_id, &det.label, clamped, det.confidence, taxonomy)
            .map_err(|e| IngestError::ProtocolViolation(e.to_string()))?;
        if seen.insert(detection.id.clone()) {
            outcome.detections.push(detection);
        }
    }
    Ok(outcome)
}
