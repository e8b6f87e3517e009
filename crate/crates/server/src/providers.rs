//! Stand-in servers for the two external protocols: a deterministic
//! outpainting provider and a detector that replays recorded detections.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use base64::Engine;

use artlens_core::canvas::{encode_png, MockProvider, OutpaintWireRequest, OutpaintWireResponse, OutpaintingProvider};
use artlens_core::ingestion::{DetectionRecord, DetectorRequest, DetectorResponse, ResponseBox, ResponseDetection};
use artlens_core::taxonomy::parse_prompt;

use crate::error::ApiError;

/// `POST /outpaint` backed by [`MockProvider`].
pub fn mock_provider_router(provider: MockProvider) -> Router {
    Router::new().route("/outpaint", post(outpaint)).with_state(Arc::new(provider))
}

async fn outpaint(
    State(provider): State<Arc<MockProvider>>,
    body: Result<Json<OutpaintWireRequest>, JsonRejection>,
) -> Result<Json<OutpaintWireResponse>, ApiError> {
    let Json(wire) = body.map_err(|e| ApiError::bad_request("malformed_request", e.body_text()))?;
    if wire.size == 0 || wire.size > provider.max_side() {
        return Err(ApiError::bad_request("unsupported_size", format!("size must be 1..={}", provider.max_side())));
    }
    let request = wire.decode().map_err(|e| ApiError::bad_request("malformed_request", e))?;
    let image = provider.outpaint(&request).await.map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(OutpaintWireResponse { image: base64_png(&encode_png(&image)), provider: Some("mock".into()) }))
}

fn base64_png(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

/// `POST /detect` answering from recorded detections, filtered to the
/// labels in the request prompt and the request cutoff.
pub fn stub_detector_router(records: Vec<DetectionRecord>) -> Router {
    let mut by_artwork: HashMap<String, Vec<DetectionRecord>> = HashMap::new();
    for r in records {
        by_artwork.entry(r.artwork_id.clone()).or_default().push(r);
    }
    Router::new().route("/detect", post(detect)).with_state(Arc::new(by_artwork))
}

async fn detect(
    State(records): State<Arc<HashMap<String, Vec<DetectionRecord>>>>,
    body: Result<Json<DetectorRequest>, JsonRejection>,
) -> Result<Json<DetectorResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request("malformed_request", e.body_text()))?;
    let labels = parse_prompt(&req.prompt).map_err(|e| ApiError::bad_request("malformed_prompt", e.to_string()))?;
    if labels.len() > artlens_core::taxonomy::LABEL_CAPACITY {
        return Err(ApiError::bad_request("prompt_too_long", format!("{} labels", labels.len())));
    }
    let detections = records
        .get(&req.artwork_id)
        .into_iter()
        .flatten()
        .filter(|r| labels.contains(&r.label) && r.confidence >= req.cutoff)
        .map(|r| ResponseDetection {
            label: r.label.clone(),
            bbox: ResponseBox { x_min: r.x_min, y_min: r.y_min, x_max: r.x_max, y_max: r.y_max },
            confidence: r.confidence,
        })
        .collect();
    Ok(Json(DetectorResponse { model: Some("stub".into()), detections }))
}
