//! Artwork and detection acquisition: collection API or fixture records,
//! content-addressed image fetching, detection file import and the detector
//! wire protocol.

mod collection;
mod detector;
mod images;
mod records;
mod retry;
mod store;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::taxonomy::{Category, Taxonomy, TaxonomyError};

pub use collection::{fetch_artworks, CollectionConfig, FetchOutcome, FieldMapping, SkippedRecord};
pub use detector::{
    DetectOutcome, DetectorClient, DetectorRequest, DetectorResponse, DroppedDetection, ImagePayload, ResponseBox,
    ResponseDetection,
};
pub(crate) use images::write_atomic;
pub use images::{CachedImage, ImageCache};
pub use records::{import_detections, DetectionRecord, ImportOutcome, RejectedRecord};
pub use retry::RetryPolicy;
pub use store::{ingest_artworks, IngestReport};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("request to {url} failed after {attempts} attempt(s): {reason}")]
    Network { url: String, attempts: u32, reason: String },
    #[error("{url} answered with status {status}")]
    Status { url: String, status: u16 },
    #[error("provider timeout after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("undecodable image from {source_ref}: {reason}")]
    Undecodable { source_ref: String, reason: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("artwork {0} has unknown image dimensions")]
    UnknownDimensions(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error(transparent)]
    Label(#[from] TaxonomyError),
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

/// Collection metadata for one painting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artwork {
    pub id: String,
    pub title: String,
    pub artist: String,
    pub production_year: Option<YearRange>,
    pub technique: String,
    /// http(s) URL or local path.
    pub image_ref: String,
    pub image_width: Option<u32>,
    pub image_height: Option<u32>,
    /// `#rrggbb` colors.
    pub palette: Option<Vec<String>>,
}

impl Artwork {
    pub fn dimensions(&self) -> Option<(u32, u32)> {
        match (self.image_width, self.image_height) {
            (Some(w), Some(h)) if w > 0 && h > 0 => Some((w, h)),
            _ => None,
        }
    }
}

/// One labeled box on one artwork.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: String,
    pub artwork_id: String,
    pub label: String,
    pub category: Category,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Detection {
    /// Validates the confidence, resolves the category and derives the id.
    pub fn new(
        artwork_id: &str,
        label: &str,
        bbox: BoundingBox,
        confidence: f64,
        taxonomy: &Taxonomy,
    ) -> Result<Self, DetectionError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(DetectionError::ConfidenceOutOfRange(confidence));
        }
        let category = taxonomy.category_of(label)?;
        Ok(Self {
            id: detection_digest(artwork_id, label, &bbox, confidence),
            artwork_id: artwork_id.to_string(),
            label: label.to_string(),
            category,
            bbox,
            confidence,
        })
    }
}

/// Deterministic detection id: first 128 bits of SHA-256 over the artwork id,
/// label and the exact bit patterns of the box and confidence.
pub fn detection_digest(artwork_id: &str, label: &str, bbox: &BoundingBox, confidence: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(artwork_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    hasher.update([0u8]);
    for v in [bbox.x_min(), bbox.y_min(), bbox.x_max(), bbox.y_max(), confidence] {
        hasher.update(v.to_bits().to_be_bytes());
    }
    hex::encode(&hasher.finalize()[..16])
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
