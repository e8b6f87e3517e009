use serde::{Deserialize, Serialize};

use super::{Artwork, ImageCache, SkippedRecord};
use crate::catalog::{Catalog, CatalogError};
use crate::curation::palette_of;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub stored: usize,
    /// Images downloaded or read from their source in this run.
    pub fetched: usize,
    pub palettes_computed: usize,
    pub skipped: Vec<SkippedRecord>,
}

/// Caches each artwork's image, fills unknown dimensions, computes a
/// palette when the metadata has none and stores the artwork. Artworks whose
/// image cannot be obtained are skipped.
pub async fn ingest_artworks(
    artworks: Vec<Artwork>,
    cache: &ImageCache,
    catalog: &Catalog,
) -> Result<IngestReport, CatalogError> {
    let mut report = IngestReport::default();
    for (position, mut artwork) in artworks.into_iter().enumerate() {
        let cached = match cache.fetch_image(&mut artwork).await {
            Ok(c) => c,
            Err(e) => {
                log::warn!("artwork {}: {e}", artwork.id);
                report.skipped.push(SkippedRecord {
                    id: Some(artwork.id),
                    position: position + 1,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if cached.fetched {
            report.fetched += 1;
        }
        if artwork.palette.is_none() {
            match cache.load(&cached) {
                Ok(img) => {
                    artwork.palette = Some(palette_of(&img));
                    report.palettes_computed += 1;
                }
                Err(e) => {
                    report.skipped.push(SkippedRecord {
                        id: Some(artwork.id),
                        position: position + 1,
                        reason: e.to_string(),
                    });
                    continue;
                }
            }
        }
        catalog.put_artwork(&artwork)?;
        report.stored += 1;
    }
    Ok(report)
}
