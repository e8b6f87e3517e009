//! Snapshot layout:
//!
//! ```text
//! manifest.json
//! artworks.jsonl  detections.jsonl  crops.jsonl  generations.jsonl
//! crops/<Category>/<detection id>.png (+ .png.sha256)
//! generated/<job id>.png
//! ```
//!
//! Record files hold one JSON document per line sorted by id, so two
//! catalogs with equal contents export byte-identical snapshots.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{read_log, sidecar_path, to_line, Catalog, CatalogError, Counts, LogKind, OpenMode};
use super::{ARTWORKS_LOG, CROPS_LOG, DETECTIONS_LOG, GENERATIONS_LOG};
use crate::canvas::GeneratedImage;
use crate::curation::{pixel_digest, ObjectCrop};
use crate::ingestion::{write_atomic, Artwork, Detection};
use crate::taxonomy::Taxonomy;

pub const SNAPSHOT_FILES: [&str; 5] = ["manifest.json", ARTWORKS_LOG, DETECTIONS_LOG, CROPS_LOG, GENERATIONS_LOG];

const FORMAT: &str = "artlens-catalog-snapshot";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    counts: Counts,
}

fn write_lines<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<(), CatalogError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&to_line(&item));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(())
}

fn copy_into(src_root: &Path, dst_root: &Path, rel: &str) -> Result<(), CatalogError> {
    let bytes = std::fs::read(src_root.join(rel))?;
    write_atomic(&dst_root.join(rel), &bytes)?;
    Ok(())
}

impl Catalog {
    /// Writes a snapshot of the whole catalog into `dest`, which must be
    /// empty or absent.
    pub fn export_snapshot(&self, dest: &Path) -> Result<Counts, CatalogError> {
        if dest.exists() && std::fs::read_dir(dest)?.next().is_some() {
            return Err(CatalogError::InvalidRecord {
                id: dest.display().to_string(),
                reason: "snapshot destination is not empty".into(),
            });
        }
        std::fs::create_dir_all(dest)?;
        let s = self.state.read();
        write_lines(&dest.join(ARTWORKS_LOG), s.artworks.values())?;
        write_lines(&dest.join(DETECTIONS_LOG), s.detections.values())?;
        write_lines(&dest.join(CROPS_LOG), s.crops.values())?;
        write_lines(&dest.join(GENERATIONS_LOG), s.generations.values())?;
        for c in s.crops.values() {
            copy_into(&self.root, dest, &c.storage_path)?;
            let sidecar = sidecar_path(Path::new(&c.storage_path));
            copy_into(&self.root, dest, &sidecar.to_string_lossy())?;
        }
        for g in s.generations.values() {
            copy_into(&self.root, dest, &g.image_path)?;
        }
        let counts = Counts {
            artworks: s.artworks.len(),
            detections: s.detections.len(),
            crops: s.crops.len(),
            generations: s.generations.len(),
        };
        let manifest = Manifest { format: FORMAT.into(), version: 1, counts };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&dest.join("manifest.json"), text.as_bytes())?;
        Ok(counts)
    }

    /// Builds a new catalog at `root` from a snapshot. Every record goes
    /// through the normal validation path and every crop file is checked
    /// against its digest.
    pub fn import_snapshot(src: &Path, root: &Path, taxonomy: Arc<Taxonomy>) -> Result<Catalog, CatalogError> {
        let manifest: Manifest = serde_json::from_slice(&std::fs::read(src.join("manifest.json"))?)
            .map_err(|e| CatalogError::Corrupt { file: "manifest.json".into(), line: 1, reason: e.to_string() })?;
        if manifest.format != FORMAT || manifest.version != 1 {
            return Err(CatalogError::Corrupt {
                file: "manifest.json".into(),
                line: 1,
                reason: format!("unsupported snapshot {} v{}", manifest.format, manifest.version),
            });
        }
        let catalog = Catalog::open(root, taxonomy, OpenMode::ReadWrite)?;
        if catalog.counts() != Counts::default() {
            return Err(CatalogError::InvalidRecord {
                id: root.display().to_string(),
                reason: "import target catalog is not empty".into(),
            });
        }
        for a in read_log::<Artwork>(src, ARTWORKS_LOG)? {
            catalog.put_artwork(&a)?;
        }
        catalog.put_detections(&read_log::<Detection>(src, DETECTIONS_LOG)?)?;
        for c in read_log::<ObjectCrop>(src, CROPS_LOG)? {
            let img = image::open(src.join(&c.storage_path)).map_err(|e| CatalogError::Image(e.to_string()))?;
            if pixel_digest(&img.to_rgba8()) != c.pixel_digest {
                return Err(CatalogError::InvalidRecord {
                    id: c.detection_id,
                    reason: "crop pixels do not match digest".into(),
                });
            }
            copy_into(src, root, &c.storage_path)?;
            let sidecar = sidecar_path(Path::new(&c.storage_path));
            write_atomic(&root.join(sidecar), format!("{}\n", c.pixel_digest).as_bytes())?;
            let mut s = catalog.state.write();
            if !s.detections.contains_key(&c.detection_id) {
                return Err(CatalogError::DanglingReference {
                    kind: "crop",
                    id: c.detection_id.clone(),
                    target: format!("detection {}", c.detection_id),
                });
            }
            s.append(LogKind::Crops, &to_line(&c))?;
            let id = c.detection_id.clone();
            s.crops.insert(id.clone(), c);
            s.index_object(&id);
        }
        for g in read_log::<GeneratedImage>(src, GENERATIONS_LOG)? {
            let png = std::fs::read(src.join(&g.image_path))?;
            catalog.put_generation(&g, &png)?;
        }
        if catalog.counts() != manifest.counts {
            return Err(CatalogError::Corrupt {
                file: "manifest.json".into(),
                line: 1,
                reason: "record counts differ from manifest".into(),
            });
        }
        Ok(catalog)
    }
}
