use std::collections::{BTreeMap, BTreeSet};

use async_trait::async_trait;
use image::RgbaImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::crop::{crop_rect, extract_crop, CropSkip, DEFAULT_MIN_SIDE};
use super::{compute_stats, select_subset, CollectionStats, SubsetSpec};
use crate::catalog::{Catalog, CatalogError};
use crate::ingestion::{Artwork, Detection, ImageCache};

/// Supplies decoded source images to the pipeline.
#[async_trait]
pub trait ImageSource: Send + Sync {
    async fn load(&self, artwork: &Artwork) -> Result<RgbaImage, String>;
}

#[async_trait]
impl ImageSource for ImageCache {
    async fn load(&self, artwork: &Artwork) -> Result<RgbaImage, String> {
        let mut artwork = artwork.clone();
        let cached = self.fetch_image(&mut artwork).await.map_err(|e| e.to_string())?;
        ImageCache::load(self, &cached).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub subset: SubsetSpec,
    pub min_side: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { subset: SubsetSpec::default(), min_side: DEFAULT_MIN_SIDE }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub detection_id: String,
    pub reason: String,
}

/// Stage counts of one curation run.
///
/// `crops + skipped_too_small + skipped_empty + failed == subset_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub total_detections: usize,
    pub paintings_with_detections: usize,
    pub subset_size: usize,
    pub subset_paintings: usize,
    /// Subset detections that have a stored crop after this run.
    pub crops: usize,
    /// Crops written by this run.
    pub new_crops: usize,
    /// Distinct paintings among `crops`.
    pub crop_paintings: usize,
    pub skipped_too_small: usize,
    pub skipped_empty: usize,
    /// Detections whose source image could not be loaded.
    pub failed: usize,
    pub skips: Vec<SkipRecord>,
    pub stats: CollectionStats,
}

impl PipelineReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "detections: {} on {} paintings\n",
            self.total_detections, self.paintings_with_detections
        ));
        out.push_str(&format!("subset: {} on {} paintings\n", self.subset_size, self.subset_paintings));
        out.push_str(&format!("crops: {} on {} paintings ({} new)\n", self.crops, self.crop_paintings, self.new_crops));
        out.push_str(&format!(
            "skipped: {} too small, {} empty after clamp, {} failed\n",
            self.skipped_too_small, self.skipped_empty, self.failed
        ));
        out
    }
}

/// Stats, per-label subset, crop extraction and registration over every
/// detection in the catalog. Per-item problems become skips; only storage
/// errors abort the run. Re-running with unchanged inputs writes nothing.
pub async fn run_pipeline(
    catalog: &Catalog,
    images: &dyn ImageSource,
    config: PipelineConfig,
) -> Result<PipelineReport, PipelineError> {
    let detections = catalog.detections();
    let stats = compute_stats(&detections);
    let subset = select_subset(&detections, config.subset);

    let mut by_artwork: BTreeMap<&str, Vec<&Detection>> = BTreeMap::new();
    for d in &subset {
        by_artwork.entry(d.artwork_id.as_str()).or_default().push(d);
    }

    let mut report = PipelineReport {
        total_detections: stats.total_detections,
        paintings_with_detections: stats.paintings_with_detections,
        subset_size: subset.len(),
        subset_paintings: by_artwork.len(),
        crops: 0,
        new_crops: 0,
        crop_paintings: 0,
        skipped_too_small: 0,
        skipped_empty: 0,
        failed: 0,
        skips: Vec::new(),
        stats,
    };
    let mut crop_paintings = BTreeSet::new();

    for (artwork_id, dets) in by_artwork {
        let artwork =
            catalog.artwork(artwork_id).ok_or_else(|| CatalogError::UnknownArtwork(artwork_id.to_string()))?;

        // Settle what can be decided without pixels first.
        let mut pending = Vec::new();
        for d in dets {
            if catalog.crop(&d.id).is_some() {
                report.crops += 1;
                crop_paintings.insert(artwork_id);
                continue;
            }
            if let Some((w, h)) = artwork.dimensions() {
                if let Err(skip) = crop_rect(&d.bbox, w, h, config.min_side) {
                    record_skip(&mut report, &d.id, &skip);
                    continue;
                }
            }
            pending.push(d);
        }
        if pending.is_empty() {
            continue;
        }

        let image = match images.load(&artwork).await {
            Ok(img) => img,
            Err(reason) => {
                log::warn!("image for artwork {artwork_id} unavailable: {reason}");
                for d in pending {
                    report.failed += 1;
                    report.skips.push(SkipRecord {
                        detection_id: d.id.clone(),
                        reason: format!("image unavailable: {reason}"),
                    });
                }
                continue;
            }
        };
        for d in pending {
            match extract_crop(&image, d, config.min_side) {
                Ok(crop) => {
                    catalog.put_crop(&crop)?;
                    report.crops += 1;
                    report.new_crops += 1;
                    crop_paintings.insert(artwork_id);
                }
                Err(skip) => record_skip(&mut report, &d.id, &skip),
            }
        }
    }
    report.crop_paintings = crop_paintings.len();
    report.skips.sort_by(|a, b| a.detection_id.cmp(&b.detection_id));
    Ok(report)
}

fn record_skip(report: &mut PipelineReport, id: &str, skip: &CropSkip) {
    match skip {
        CropSkip::TooSmall { .. } => report.skipped_too_small += 1,
        CropSkip::Empty => report.skipped_empty += 1,
    }
    report.skips.push(SkipRecord { detection_id: id.to_string(), reason: skip.reason().to_string() });
}
