//! Content-addressed image cache.
//!
//! Layout under the cache root:
//!
//! ```text
//! blobs/<sha256 of bytes>.<ext>   image bytes, shared by every ref with that content
//! refs/<sha256 of image_ref>      name of the blob the ref resolved to
//! ```
//!
//! Blobs and refs are written to a temporary file and renamed into place, so
//! concurrent writers of the same content converge on the same files.

use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbaImage};

use super::retry::{get_bytes, RetryPolicy};
use super::{sha256_hex, Artwork, IngestError};

#[derive(Debug, Clone)]
pub struct ImageCache {
    root: PathBuf,
    client: reqwest::Client,
    retry: RetryPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedImage {
    pub path: PathBuf,
    pub digest: String,
    pub width: u32,
    pub height: u32,
    /// False when served from the cache without touching the source.
    pub fetched: bool,
}

impl ImageCache {
    pub fn new(root: impl Into<PathBuf>, client: reqwest::Client, retry: RetryPolicy) -> Result<Self, IngestError> {
        let root = root.into();
        std::fs::create_dir_all(root.join("blobs"))?;
        std::fs::create_dir_all(root.join("refs"))?;
        Ok(Self { root, client, retry })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Returns the cached image for `artwork`, fetching it on a miss, and
    /// fills in the artwork's dimensions when they were unknown.
    pub async fn fetch_image(&self, artwork: &mut Artwork) -> Result<CachedImage, IngestError> {
        let cached = match self.lookup(&artwork.image_ref)? {
            Some(hit) => hit,
            None => {
                let bytes = self.read_source(&artwork.image_ref).await?;
                self.store(&artwork.image_ref, &bytes)?
            }
        };
        if artwork.dimensions().is_none() {
            artwork.image_width = Some(cached.width);
            artwork.image_height = Some(cached.height);
        }
        Ok(cached)
    }

    /// Decodes a cached image into RGBA8.
    pub fn load(&self, cached: &CachedImage) -> Result<RgbaImage, IngestError> {
        let bytes = std::fs::read(&cached.path)?;
        decode(&bytes, &cached.path.display().to_string())
    }

    fn ref_path(&self, image_ref: &str) -> PathBuf {
        self.root.join("refs").join(sha256_hex(image_ref.as_bytes()))
    }

    fn lookup(&self, image_ref: &str) -> Result<Option<CachedImage>, IngestError> {
        let ref_path = self.ref_path(image_ref);
        let Ok(blob_name) = std::fs::read_to_string(&ref_path) else {
            return Ok(None);
        };
        let path = self.root.join("blobs").join(blob_name.trim());
        if !path.is_file() {
            return Ok(None);
        }
        let (width, height) = image::image_dimensions(&path)
            .map_err(|e| IngestError::Undecodable { source_ref: image_ref.to_string(), reason: e.to_string() })?;
        let digest = blob_name.trim().split('.').next().unwrap_or_default().to_string();
        Ok(Some(CachedImage { path, digest, width, height, fetched: false }))
    }

    async fn read_source(&self, image_ref: &str) -> Result<Vec<u8>, IngestError> {
        if image_ref.starts_with("http://") || image_ref.starts_with("https://") {
            get_bytes(&self.client, image_ref, &[], &[], &self.retry).await
        } else {
            let path = image_ref.strip_prefix("file://").unwrap_or(image_ref);
            Ok(tokio::fs::read(path).await?)
        }
    }

    fn store(&self, image_ref: &str, bytes: &[u8]) -> Result<CachedImage, IngestError> {
        let format = image::guess_format(bytes)
            .map_err(|e| IngestError::Undecodable { source_ref: image_ref.to_string(), reason: e.to_string() })?;
        let decoded = decode(bytes, image_ref)?;
        let digest = sha256_hex(bytes);
        let ext = format.extensions_str().first().copied().unwrap_or("img");
        let blob_name = format!("{digest}.{ext}");
        let path = self.root.join("blobs").join(&blob_name);
        if !path.is_file() {
            write_atomic(&path, bytes)?;
        }
        write_atomic(&self.ref_path(image_ref), blob_name.as_bytes())?;
        Ok(CachedImage { path, digest, width: decoded.width(), height: decoded.height(), fetched: true })
    }
}

fn decode(bytes: &[u8], source_ref: &str) -> Result<RgbaImage, IngestError> {
    let format = image::guess_format(bytes).ok();
    let result = match format {
        Some(f @ (ImageFormat::Png | ImageFormat::Jpeg)) => image::load_from_memory_with_format(bytes, f),
        _ => image::load_from_memory(bytes),
    };
    result
        .map(|img| img.to_rgba8())
        .map_err(|e| IngestError::Undecodable { source_ref: source_ref.to_string(), reason: e.to_string() })
}

/// Writes via a uniquely named temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("blob"),
        uuid::Uuid::new_v4().simple()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
