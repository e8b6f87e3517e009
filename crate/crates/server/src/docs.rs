//! Response documents.

use serde::{Deserialize, Serialize};

use artlens_core::catalog::{DetectionEntry, ObjectEntry, PaintingDetail};
use artlens_core::curation::ObjectCrop;
use artlens_core::geometry::BoundingBox;
use artlens_core::ingestion::{Artwork, YearRange};
use artlens_core::taxonomy::Category;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropRef {
    pub url: String,
    pub width: u32,
    pub height: u32,
    pub pixel_digest: String,
}

impl From<&ObjectCrop> for CropRef {
    fn from(c: &ObjectCrop) -> Self {
        Self {
            url: format!("/crops/{}", c.detection_id),
            width: c.width,
            height: c.height,
            pixel_digest: c.pixel_digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub detection_id: String,
    pub artwork_id: String,
    pub label: String,
    pub category: Category,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub crop: CropRef,
}

impl From<&ObjectEntry> for ObjectDoc {
    fn from(o: &ObjectEntry) -> Self {
        let d = &o.detection;
        Self {
            detection_id: d.id.clone(),
            artwork_id: d.artwork_id.clone(),
            label: d.label.clone(),
            category: d.category,
            confidence: d.confidence,
            bbox: d.bbox,
            crop: CropRef::from(&o.crop),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDoc {
    pub category: Category,
    pub object_count: usize,
    /// Highest-confidence object of the category, absent when it has none.
    pub representative: Option<ObjectDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoriesDoc {
    pub categories: Vec<CategoryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPageDoc {
    pub items: Vec<ObjectDoc>,
    pub next_cursor: Option<String>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageDoc {
    pub width: Option<u32>,
    pub height: Option<u32>,
    /// Always `/paintings/{id}/image`; local paths are never exposed.
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtworkDoc {
    pub id: String,
    pub title: String,
    pub artist: String,
    pub technique: String,
    pub production_year: Option<YearRange>,
    pub palette: Option<Vec<String>>,
    pub image: ImageDoc,
}

impl From<&Artwork> for ArtworkDoc {
    fn from(a: &Artwork) -> Self {
        Self {
            id: a.id.clone(),
            title: a.title.clone(),
            artist: a.artist.clone(),
            technique: a.technique.clone(),
            production_year: a.production_year,
            palette: a.palette.clone(),
            image: ImageDoc { width: a.image_width, height: a.image_height, url: format!("/paintings/{}/image", a.id) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintingObjectDoc {
    pub detection_id: String,
    pub label: String,
    pub category: Category,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    /// Absent when the detection was not cropped (not browsable).
    pub crop: Option<CropRef>,
}

impl From<&DetectionEntry> for PaintingObjectDoc {
    fn from(e: &DetectionEntry) -> Self {
        let d = &e.detection;
        Self {
            detection_id: d.id.clone(),
            label: d.label.clone(),
            category: d.category,
            confidence: d.confidence,
            bbox: d.bbox,
            crop: e.crop.as_ref().map(CropRef::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintingDoc {
    pub artwork: ArtworkDoc,
    pub objects: Vec<PaintingObjectDoc>,
}

impl From<&PaintingDetail> for PaintingDoc {
    fn from(p: &PaintingDetail) -> Self {
        Self {
            artwork: ArtworkDoc::from(&p.artwork),
            objects: p.detections.iter().map(PaintingObjectDoc::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDoc {
    pub session_id: String,
    pub created_at: chrono::DateTime<chrono::Utc>,
    pub favorites: Vec<ObjectDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeDoc {
    pub slides: Vec<ObjectDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub detection_id: String,
    pub x: u32,
    pub y: u32,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasRequest {
    #[serde(default)]
    pub side: Option<u32>,
    pub prompt: String,
    pub placements: Vec<PlacementRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResultDoc {
    pub image_url: String,
    pub width: u32,
    pub height: u32,
    pub provider_id: String,
    /// The objects used on the canvas, for navigating back to paintings.
    pub used_objects: Vec<ObjectDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDoc {
    pub job_id: String,
    pub session_id: String,
    pub status: JobStatus,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<GenerationResultDoc>,
}
