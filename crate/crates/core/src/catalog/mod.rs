//! Embedded catalog of artworks, detections, crops and generated images.
//!
//! Records live in memory behind a single `RwLock` and are persisted as
//! append-only line-delimited JSON logs under the catalog root:
//!
//! ```text
//! artworks.jsonl  detections.jsonl  crops.jsonl  generations.jsonl
//! crops/<Category>/<detection id>.png (+ .png.sha256 sidecar)
//! generated/<job id>.png
//! .lock
//! ```
//!
//! A write appends the log line and updates record and indexes under the
//! write lock, so readers never see a record without its index entries.

mod cursor;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::ops::Bound;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbaImage;
use parking_lot::RwLock;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canvas::GeneratedImage;
use crate::curation::{pixel_digest, CropImage, ObjectCrop};
use crate::ingestion::{Artwork, Detection};
use crate::taxonomy::{Category, Taxonomy};

pub use cursor::RankKey;
pub use snapshot::SNAPSHOT_FILES;

pub const MAX_PAGE_SIZE: usize = 500;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("conflicting write for {kind} {id}")]
    ConflictingWrite { kind: &'static str, id: String },
    #[error("dangling reference: {kind} {id} refers to missing {target}")]
    DanglingReference { kind: &'static str, id: String, target: String },
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("label {label:?} does not belong to category {category}")]
    LabelCategoryMismatch { label: String, category: Category },
    #[error("invalid cursor")]
    InvalidCursor,
    #[error("page size must be between 1 and {MAX_PAGE_SIZE}")]
    InvalidPageSize,
    #[error("unknown artwork {0:?}")]
    UnknownArtwork(String),
    #[error("unknown detection {0:?}")]
    UnknownDetection(String),
    #[error("no crop for detection {0:?}")]
    MissingCrop(String),
    #[error("catalog at {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("catalog is open read-only")]
    ReadOnly,
    #[error("corrupt log {file} line {line}: {reason}")]
    Corrupt { file: String, line: usize, reason: String },
    #[error("image: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    ReadWrite,
    ReadOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub next_cursor: Option<String>,
    pub total: usize,
}

/// A browsable object: a detection together with its stored crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub detection: Detection,
    pub crop: ObjectCrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub detection: Detection,
    pub crop: Option<ObjectCrop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintingDetail {
    pub artwork: Artwork,
    /// Ranked by descending confidence, then id.
    pub detections: Vec<DetectionEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub artworks: usize,
    pub detections: usize,
    pub crops: usize,
    pub generations: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub artworks: usize,
    pub detections: usize,
    pub crops: usize,
    pub generations: usize,
}

#[derive(Default)]
struct State {
    artworks: BTreeMap<String, Artwork>,
    detections: BTreeMap<String, Detection>,
    crops: BTreeMap<String, ObjectCrop>,
    generations: BTreeMap<String, GeneratedImage>,
    by_category: BTreeMap<Category, BTreeSet<RankKey>>,
    by_label: BTreeMap<String, BTreeSet<RankKey>>,
    by_artwork: BTreeMap<String, BTreeSet<String>>,
    objects_by_category: BTreeMap<Category, BTreeSet<RankKey>>,
    objects_by_label: BTreeMap<String, BTreeSet<RankKey>>,
    objects: BTreeSet<RankKey>,
    logs: Option<Logs>,
}

struct Logs {
    artworks: File,
    detections: File,
    crops: File,
    generations: File,
}

const ARTWORKS_LOG: &str = "artworks.jsonl";
const DETECTIONS_LOG: &str = "detections.jsonl";
const CROPS_LOG: &str = "crops.jsonl";
const GENERATIONS_LOG: &str = "generations.jsonl";

struct LockFile(PathBuf);

impl Drop for LockFile {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

pub struct Catalog {
    root: PathBuf,
    taxonomy: Arc<Taxonomy>,
    state: RwLock<State>,
    _lock: Option<LockFile>,
}

impl std::fmt::Debug for Catalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Catalog").field("root", &self.root).field("counts", &self.counts()).finish()
    }
}

impl State {
    fn index_detection(&mut self, d: &Detection) {
        let key = RankKey::of(d);
        self.by_category.entry(d.category).or_default().insert(key.clone());
        self.by_label.entry(d.label.clone()).or_default().insert(key);
        self.by_artwork.entry(d.artwork_id.clone()).or_default().insert(d.id.clone());
    }

    fn index_object(&mut self, detection_id: &str) {
        let Some(d) = self.detections.get(detection_id) else {
            return;
        };
        let key = RankKey::of(d);
        let (category, label) = (d.category, d.label.clone());
        self.objects_by_category.entry(category).or_default().insert(key.clone());
        self.objects_by_label.entry(label).or_default().insert(key.clone());
        self.objects.insert(key);
    }

    fn append(&mut self, kind: LogKind, line: &str) -> Result<(), CatalogError> {
        let logs = self.logs.as_mut().ok_or(CatalogError::ReadOnly)?;
        let file = match kind {
            LogKind::Artworks => &mut logs.artworks,
            LogKind::Detections => &mut logs.detections,
            LogKind::Crops => &mut logs.crops,
            LogKind::Generations => &mut logs.generations,
        };
        let mut buf = String::with_capacity(line.len() + 1);
        buf.push_str(line);
        buf.push('\n');
        file.write_all(buf.as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum LogKind {
    Artworks,
    Detections,
    Crops,
    Generations,
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("catalog records serialize")
}

fn read_log<T: DeserializeOwned>(root: &Path, name: &str) -> Result<Vec<T>, CatalogError> {
    let path = root.join(name);
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| CatalogError::Corrupt {
            file: name.to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

fn open_append(path: PathBuf) -> std::io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

impl Catalog {
    /// Opens (or creates) the catalog at `root`. Read-write opens take the
    /// writer lock for the lifetime of the value.
    pub fn open(root: impl Into<PathBuf>, taxonomy: Arc<Taxonomy>, mode: OpenMode) -> Result<Self, CatalogError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let lock = match mode {
            OpenMode::ReadWrite => {
                let path = root.join(".lock");
                match OpenOptions::new().write(true).create_new(true).open(&path) {
                    Ok(mut f) => {
                        let _ = writeln!(f, "{}", std::process::id());
                        Some(LockFile(path))
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                        return Err(CatalogError::Locked(root));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            OpenMode::ReadOnly => None,
        };

        let mut state = State::default();
        for a in read_log::<Artwork>(&root, ARTWORKS_LOG)? {
            state.artworks.insert(a.id.clone(), a);
        }
        for d in read_log::<Detection>(&root, DETECTIONS_LOG)? {
            state.index_detection(&d);
            state.detections.insert(d.id.clone(), d);
        }
        for c in read_log::<ObjectCrop>(&root, CROPS_LOG)? {
            let id = c.detection_id.clone();
            state.crops.insert(id.clone(), c);
            state.index_object(&id);
        }
        for g in read_log::<GeneratedImage>(&root, GENERATIONS_LOG)? {
            state.generations.insert(g.job_id.clone(), g);
        }
        if mode == OpenMode::ReadWrite {
            state.logs = Some(Logs {
                artworks: open_append(root.join(ARTWORKS_LOG))?,
                detections: open_append(root.join(DETECTIONS_LOG))?,
                crops: open_append(root.join(CROPS_LOG))?,
                generations: open_append(root.join(GENERATIONS_LOG))?,
            });
        }
        Ok(Self { root, taxonomy, state: RwLock::new(state), _lock: lock })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn counts(&self) -> Counts {
        let s = self.state.read();
        Counts {
            artworks: s.artworks.len(),
            detections: s.detections.len(),
            crops: s.crops.len(),
            generations: s.generations.len(),
        }
    }

    // ---- writes -------------------------------------------------------

    pub fn put_artwork(&self, artwork: &Artwork) -> Result<String, CatalogError> {
        if artwork.id.is_empty() {
            return Err(CatalogError::InvalidRecord { id: String::new(), reason: "empty id".into() });
        }
        if artwork.image_width == Some(0) || artwork.image_height == Some(0) {
            return Err(CatalogError::InvalidRecord {
                id: artwork.id.clone(),
                reason: "image dimensions must be positive".into(),
            });
        }
        let mut s = self.state.write();
        if let Some(existing) = s.artworks.get(&artwork.id) {
            return if existing == artwork {
                Ok(artwork.id.clone())
            } else {
                Err(CatalogError::ConflictingWrite { kind: "artwork", id: artwork.id.clone() })
            };
        }
        s.append(LogKind::Artworks, &to_line(artwork))?;
        s.artworks.insert(artwork.id.clone(), artwork.clone());
        Ok(artwork.id.clone())
    }

    pub fn put_detection(&self, d: &Detection) -> Result<String, CatalogError> {
        let mut s = self.state.write();
        self.put_detection_locked(&mut s, d)
    }

    /// Stores many detections under one lock acquisition; stops at the first
    /// error.
    pub fn put_detections(&self, dets: &[Detection]) -> Result<usize, CatalogError> {
        let mut s = self.state.write();
        let before = s.detections.len();
        for d in dets {
            self.put_detection_locked(&mut s, d)?;
        }
        Ok(s.detections.len() - before)
    }

    fn put_detection_locked(&self, s: &mut State, d: &Detection) -> Result<String, CatalogError> {
        if !s.artworks.contains_key(&d.artwork_id) {
            return Err(CatalogError::DanglingReference {
                kind: "detection",
                id: d.id.clone(),
                target: format!("artwork {}", d.artwork_id),
            });
        }
        let resolved = self
            .taxonomy
            .category_of(&d.label)
            .map_err(|e| CatalogError::InvalidRecord { id: d.id.clone(), reason: e.to_string() })?;
        if resolved != d.category {
            return Err(CatalogError::InvalidRecord {
                id: d.id.clone(),
                reason: format!("category {} but label {} resolves to {resolved}", d.category, d.label),
            });
        }
        if !(0.0..=1.0).contains(&d.confidence) {
            return Err(CatalogError::InvalidRecord { id: d.id.clone(), reason: "confidence outside [0, 1]".into() });
        }
        if let Some(existing) = s.detections.get(&d.id) {
            return if existing == d {
                Ok(d.id.clone())
            } else {
                Err(CatalogError::ConflictingWrite { kind: "detection", id: d.id.clone() })
            };
        }
        s.append(LogKind::Detections, &to_line(d))?;
        s.index_detection(d);
        s.detections.insert(d.id.clone(), d.clone());
        Ok(d.id.clone())
    }

    /// Relative storage path of a detection's crop.
    pub fn crop_storage_path(category: Category, detection_id: &str) -> String {
        format!("crops/{}/{}.png", category.as_str(), detection_id)
    }

    /// Writes the crop PNG and digest sidecar, then registers the record.
    /// Storing identical pixels again is a no-op returning the same record.
    pub fn put_crop(&self, crop: &CropImage) -> Result<ObjectCrop, CatalogError> {
        let record = ObjectCrop {
            detection_id: crop.detection_id.clone(),
            crop_box: crop.crop_box,
            width: crop.pixels.width(),
            height: crop.pixels.height(),
            pixel_digest: crop.pixel_digest.clone(),
            storage_path: Self::crop_storage_path(crop.category, &crop.detection_id),
        };
        let mut s = self.state.write();
        if s.logs.is_none() {
            return Err(CatalogError::ReadOnly);
        }
        let Some(det) = s.detections.get(&crop.detection_id) else {
            return Err(CatalogError::DanglingReference {
                kind: "crop",
                id: crop.detection_id.clone(),
                target: format!("detection {}", crop.detection_id),
            });
        };
        if det.category != crop.category {
            return Err(CatalogError::InvalidRecord {
                id: crop.detection_id.clone(),
                reason: "crop category differs from detection".into(),
            });
        }
        let existing = s.crops.get(&crop.detection_id).cloned();
        if let Some(existing) = &existing {
            if existing != &record {
                return Err(CatalogError::ConflictingWrite { kind: "crop", id: crop.detection_id.clone() });
            }
        }
        let path = self.root.join(&record.storage_path);
        if existing.is_none() || !path.is_file() {
            let mut png = std::io::Cursor::new(Vec::new());
            crop.pixels.write_to(&mut png, image::ImageFormat::Png).map_err(|e| CatalogError::Image(e.to_string()))?;
            crate::ingestion::write_atomic(&path, png.get_ref())?;
            crate::ingestion::write_atomic(&sidecar_path(&path), format!("{}\n", record.pixel_digest).as_bytes())?;
        }
        if existing.is_none() {
            s.append(LogKind::Crops, &to_line(&record))?;
            s.crops.insert(record.detection_id.clone(), record.clone());
            s.index_object(&record.detection_id);
        }
        Ok(record)
    }

    /// Stores a generated image and its record.
    pub fn put_generation(&self, record: &GeneratedImage, png: &[u8]) -> Result<(), CatalogError> {
        let mut s = self.state.write();
        if s.logs.is_none() {
            return Err(CatalogError::ReadOnly);
        }
        for id in &record.used_objects {
            if !s.detections.contains_key(id) {
                return Err(CatalogError::DanglingReference {
                    kind: "generation",
                    id: record.job_id.clone(),
                    target: format!("detection {id}"),
                });
            }
        }
        if let Some(existing) = s.generations.get(&record.job_id) {
            return if existing == record {
                Ok(())
            } else {
                Err(CatalogError::ConflictingWrite { kind: "generation", id: record.job_id.clone() })
            };
        }
        crate::ingestion::write_atomic(&self.root.join(&record.image_path), png)?;
        s.append(LogKind::Generations, &to_line(record))?;
        s.generations.insert(record.job_id.clone(), record.clone());
        Ok(())
    }

    // ---- reads --------------------------------------------------------

    pub fn artwork(&self, id: &str) -> Option<Artwork> {
        self.state.read().artworks.get(id).cloned()
    }

    pub fn detection(&self, id: &str) -> Option<Detection> {
        self.state.read().detections.get(id).cloned()
    }

    pub fn crop(&self, detection_id: &str) -> Option<ObjectCrop> {
        self.state.read().crops.get(detection_id).cloned()
    }

    pub fn object(&self, detection_id: &str) -> Option<ObjectEntry> {
        let s = self.state.read();
        let crop = s.crops.get(detection_id)?.clone();
        let detection = s.detections.get(detection_id)?.clone();
        Some(ObjectEntry { detection, crop })
    }

    pub fn generation(&self, job_id: &str) -> Option<GeneratedImage> {
        self.state.read().generations.get(job_id).cloned()
    }

    /// All artworks sorted by id.
    pub fn artworks(&self) -> Vec<Artwork> {
        self.state.read().artworks.values().cloned().collect()
    }

    /// All detections sorted by id.
    pub fn detections(&self) -> Vec<Detection> {
        self.state.read().detections.values().cloned().collect()
    }

    /// All crops sorted by detection id.
    pub fn crops(&self) -> Vec<ObjectCrop> {
        self.state.read().crops.values().cloned().collect()
    }

    /// Detection ids for a category, ranked.
    pub fn detection_ids_by_category(&self, category: Category) -> Vec<String> {
        let s = self.state.read();
        s.by_category.get(&category).map(|set| set.iter().map(|k| k.id.clone()).collect()).unwrap_or_default()
    }

    /// Detection ids for a label, ranked.
    pub fn detection_ids_by_label(&self, label: &str) -> Vec<String> {
        let s = self.state.read();
        s.by_label.get(label).map(|set| set.iter().map(|k| k.id.clone()).collect()).unwrap_or_default()
    }

    /// Detection ids on an artwork, sorted by id.
    pub fn detection_ids_by_artwork(&self, artwork_id: &str) -> Vec<String> {
        let s = self.state.read();
        s.by_artwork.get(artwork_id).map(|set| set.iter().cloned().collect()).unwrap_or_default()
    }

    pub fn crop_file(&self, crop: &ObjectCrop) -> PathBuf {
        self.root.join(&crop.storage_path)
    }

    pub fn read_crop_pixels(&self, detection_id: &str) -> Result<RgbaImage, CatalogError> {
        let crop = self.crop(detection_id).ok_or_else(|| CatalogError::MissingCrop(detection_id.to_string()))?;
        let img = image::open(self.crop_file(&crop)).map_err(|e| CatalogError::Image(e.to_string()))?;
        Ok(img.to_rgba8())
    }

    /// Number of browsable objects in a category.
    pub fn object_count(&self, category: Category) -> usize {
        self.state.read().objects_by_category.get(&category).map_or(0, BTreeSet::len)
    }

    /// Highest-ranked browsable object of a category.
    pub fn top_object(&self, category: Category) -> Option<ObjectEntry> {
        let id = {
            let s = self.state.read();
            s.objects_by_category.get(&category)?.first()?.id.clone()
        };
        self.object(&id)
    }

    /// Browsable objects (detections with crops) matching the filters,
    /// ordered by descending confidence then ascending id.
    pub fn query_objects(
        &self,
        category: Option<Category>,
        label: Option<&str>,
        cursor: Option<&str>,
        page_size: usize,
    ) -> Result<Page<ObjectEntry>, CatalogError> {
        if page_size == 0 || page_size > MAX_PAGE_SIZE {
            return Err(CatalogError::InvalidPageSize);
        }
        if let Some(label) = label {
            if !self.taxonomy.contains_name(label) {
                return Err(CatalogError::UnknownLabel(label.to_string()));
            }
            if let Some(category) = category {
                if !self.taxonomy.has_entry(label, category) {
                    return Err(CatalogError::LabelCategoryMismatch { label: label.to_string(), category });
                }
            }
        }
        let after = cursor.map(RankKey::decode).transpose()?;

        let s = self.state.read();
        let empty = BTreeSet::new();
        let set = match (label, category) {
            (Some(l), _) => s.objects_by_label.get(l).unwrap_or(&empty),
            (None, Some(c)) => s.objects_by_category.get(&c).unwrap_or(&empty),
            (None, None) => &s.objects,
        };
        let matches = |k: &RankKey| match (label, category) {
            (Some(_), Some(c)) => s.detections.get(&k.id).is_some_and(|d| d.category == c),
            _ => true,
        };
        let total = match (label, category) {
            (Some(_), Some(_)) => set.iter().filter(|k| matches(k)).count(),
            _ => set.len(),
        };
        let lower = match &after {
            Some(k) => Bound::Excluded(k),
            None => Bound::Unbounded,
        };
        let mut iter = set.range((lower, Bound::Unbounded)).filter(|k| matches(k));
        let mut items = Vec::with_capacity(page_size.min(total));
        let mut last = None;
        for key in iter.by_ref().take(page_size) {
            let detection = s.detections[&key.id].clone();
            let crop = s.crops[&key.id].clone();
            items.push(ObjectEntry { detection, crop });
            last = Some(key);
        }
        let next_cursor = match (last, iter.next()) {
            (Some(k), Some(_)) => Some(k.encode()),
            _ => None,
        };
        Ok(Page { items, next_cursor, total })
    }

    pub fn get_painting_detail(&self, artwork_id: &str) -> Result<PaintingDetail, CatalogError> {
        let s = self.state.read();
        let artwork =
            s.artworks.get(artwork_id).cloned().ok_or_else(|| CatalogError::UnknownArtwork(artwork_id.to_string()))?;
        let mut detections: Vec<DetectionEntry> = s
            .by_artwork
            .get(artwork_id)
            .into_iter()
            .flatten()
            .filter_map(|id| s.detections.get(id))
            .map(|d| DetectionEntry { detection: d.clone(), crop: s.crops.get(&d.id).cloned() })
            .collect();
        detections.sort_by(|a, b| RankKey::of(&a.detection).cmp(&RankKey::of(&b.detection)));
        Ok(PaintingDetail { artwork, detections })
    }

    /// Full scan of referential integrity, taxonomy resolution, index
    /// consistency and crop file digests.
    pub fn audit(&self) -> AuditReport {
        let s = self.state.read();
        let mut v = Vec::new();
        for d in s.detections.values() {
            if !s.artworks.contains_key(&d.artwork_id) {
                v.push(format!("detection {} refers to missing artwork {}", d.id, d.artwork_id));
            }
            match self.taxonomy.category_of(&d.label) {
                Ok(c) if c == d.category => {}
                Ok(c) => {
                    v.push(format!("detection {} has category {} but {} resolves to {c}", d.id, d.category, d.label))
                }
                Err(e) => v.push(format!("detection {}: {e}", d.id)),
            }
            let key = RankKey::of(d);
            if !s.by_label.get(&d.label).is_some_and(|set| set.contains(&key))
                || !s.by_category.get(&d.category).is_some_and(|set| set.contains(&key))
                || !s.by_artwork.get(&d.artwork_id).is_some_and(|set| set.contains(&d.id))
            {
                v.push(format!("detection {} missing from an index", d.id));
            }
        }
        for set in s.by_label.values().chain(s.by_category.values()) {
            for k in set {
                if !s.detections.contains_key(&k.id) {
                    v.push(format!("index entry {} resolves to no detection", k.id));
                }
            }
        }
        for c in s.crops.values() {
            if !s.detections.contains_key(&c.detection_id) {
                v.push(format!("crop {} refers to missing detection", c.detection_id));
            }
            let path = self.root.join(&c.storage_path);
            match image::open(&path) {
                Ok(img) => {
                    let img = img.to_rgba8();
                    if pixel_digest(&img) != c.pixel_digest {
                        v.push(format!("crop {} pixels do not match digest", c.detection_id));
                    }
                    if img.dimensions() != (c.width, c.height) {
                        v.push(format!("crop {} dimensions differ from record", c.detection_id));
                    }
                }
                Err(e) => v.push(format!("crop {} unreadable at {}: {e}", c.detection_id, c.storage_path)),
            }
            match std::fs::read_to_string(sidecar_path(&path)) {
                Ok(text) if text.trim() == c.pixel_digest => {}
                Ok(_) => v.push(format!("crop {} digest sidecar disagrees", c.detection_id)),
                Err(_) => v.push(format!("crop {} digest sidecar missing", c.detection_id)),
            }
        }
        for g in s.generations.values() {
            for id in &g.used_objects {
                if !s.detections.contains_key(id) {
                    v.push(format!("generation {} refers to missing detection {id}", g.job_id));
                }
            }
            if !self.root.join(&g.image_path).is_file() {
                v.push(format!("generation {} image missing", g.job_id));
            }
        }
        AuditReport {
            artworks: s.artworks.len(),
            detections: s.detections.len(),
            crops: s.crops.len(),
            generations: s.generations.len(),
            violations: v,
        }
    }
}

pub(crate) fn sidecar_path(crop_path: &Path) -> PathBuf {
    let mut name = crop_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".sha256");
    crop_path.with_file_name(name)
}

#[cfg(test)]
mod tests;
