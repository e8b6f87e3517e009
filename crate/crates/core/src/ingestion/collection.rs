//! Collection metadata from a paginated HTTP API or line-delimited fixtures.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::retry::{get_bytes, RetryPolicy};
use super::{Artwork, IngestError, YearRange};

/// JSON pointers locating each artwork field inside one API item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMapping {
    pub id: String,
    pub title: String,
    pub artist: String,
    pub year_start: String,
    pub year_end: String,
    pub technique: String,
    pub image_ref: String,
    pub image_width: String,
    pub image_height: String,
    pub palette: String,
    pub object_type: String,
}

impl Default for FieldMapping {
    fn default() -> Self {
        Self {
            id: "/id".into(),
            title: "/title".into(),
            artist: "/artist".into(),
            year_start: "/production_year/start".into(),
            year_end: "/production_year/end".into(),
            technique: "/technique".into(),
            image_ref: "/image_ref".into(),
            image_width: "/image_width".into(),
            image_height: "/image_height".into(),
            palette: "/palette".into(),
            object_type: "/object_type".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectionConfig {
    /// API endpoint; ignored when `fixture_path` is set.
    pub base_url: Option<String>,
    /// A `.jsonl` file or a directory of them.
    pub fixture_path: Option<PathBuf>,
    pub page_size: usize,
    pub api_key: Option<String>,
    pub api_key_header: String,
    pub filter_param: String,
    pub offset_param: String,
    pub rows_param: String,
    /// Pointer to the items array in a response page.
    pub items_pointer: String,
    pub fields: FieldMapping,
    pub retry: RetryPolicy,
}

impl Default for CollectionConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            fixture_path: None,
            page_size: 100,
            api_key: None,
            api_key_header: "X-Api-Key".into(),
            filter_param: "object_type".into(),
            offset_param: "offset".into(),
            rows_param: "rows".into(),
            items_pointer: "/items".into(),
            fields: FieldMapping::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    /// Record id when one could be read.
    pub id: Option<String>,
    /// Line number (fixtures) or item position (API).
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FetchOutcome {
    pub artworks: Vec<Artwork>,
    pub skipped: Vec<SkippedRecord>,
}

/// Pulls artworks matching `object_type` (all when `None`).
///
/// Fixture mode yields records sorted by id. API mode keeps the server's order
/// and pages until a short or empty page.
pub async fn fetch_artworks(
    config: &CollectionConfig,
    object_type: Option<&str>,
    client: &reqwest::Client,
) -> Result<FetchOutcome, IngestError> {
    let mut outcome = FetchOutcome::default();
    let mut seen = HashSet::new();

    if let Some(path) = &config.fixture_path {
        for (position, item) in read_fixture(path)? {
            let item = match item {
                Ok(v) => v,
                Err(reason) => {
                    skip(&mut outcome, None, position, reason);
                    continue;
                }
            };
            if let Some(wanted) = object_type {
                if let Some(kind) = text_at(&item, &config.fields.object_type) {
                    if kind != wanted {
                        continue;
                    }
                }
            }
            accept(&mut outcome, &mut seen, &config.fields, &item, position);
        }
        let base = if path.is_dir() { path.clone() } else { path.parent().map(Path::to_path_buf).unwrap_or_default() };
        for a in &mut outcome.artworks {
            a.image_ref = resolve_local(&base, &a.image_ref);
        }
        outcome.artworks.sort_by(|a, b| a.id.cmp(&b.id));
        return Ok(outcome);
    }

    let base_url = config
        .base_url
        .as_deref()
        .ok_or_else(|| IngestError::Config("neither base_url nor fixture_path configured".into()))?;
    let page_size = config.page_size.max(1);
    let headers: Vec<(String, String)> =
        config.api_key.iter().map(|k| (config.api_key_header.clone(), k.clone())).collect();
    let mut offset = 0usize;
    loop {
        let mut query =
            vec![(config.offset_param.clone(), offset.to_string()), (config.rows_param.clone(), page_size.to_string())];
        if let Some(kind) = object_type {
            query.push((config.filter_param.clone(), kind.to_string()));
        }
        let body = get_bytes(client, base_url, &query, &headers, &config.retry).await?;
        let page: Value = serde_json::from_slice(&body).map_err(|e| IngestError::MalformedResponse(e.to_string()))?;
        let items = page
            .pointer(&config.items_pointer)
            .and_then(Value::as_array)
            .ok_or_else(|| IngestError::MalformedResponse(format!("no items array at {}", config.items_pointer)))?;
        for (i, item) in items.iter().enumerate() {
            accept(&mut outcome, &mut seen, &config.fields, item, offset + i);
        }
        if items.len() < page_size {
            break;
        }
        offset += items.len();
    }
    Ok(outcome)
}

fn skip(outcome: &mut FetchOutcome, id: Option<String>, position: usize, reason: String) {
    warn!("skipping collection record {position} ({id:?}): {reason}");
    outcome.skipped.push(SkippedRecord { id, position, reason });
}

fn accept(
    outcome: &mut FetchOutcome,
    seen: &mut HashSet<String>,
    fields: &FieldMapping,
    item: &Value,
    position: usize,
) {
    match normalize(item, fields) {
        Ok(artwork) => {
            if seen.insert(artwork.id.clone()) {
                outcome.artworks.push(artwork);
            } else {
                skip(outcome, Some(artwork.id), position, "duplicate id".into());
            }
        }
        Err(reason) => skip(outcome, text_at(item, &fields.id), position, reason),
    }
}

/// Relative local image references in fixtures are relative to the fixture.
fn resolve_local(base: &Path, image_ref: &str) -> String {
    let is_remote = image_ref.starts_with("http://") || image_ref.starts_with("https://");
    let local = image_ref.strip_prefix("file://").unwrap_or(image_ref);
    if is_remote || Path::new(local).is_absolute() {
        image_ref.to_string()
    } else {
        base.join(local).to_string_lossy().into_owned()
    }
}

type FixtureLine = (usize, Result<Value, String>);

fn read_fixture(path: &Path) -> Result<Vec<FixtureLine>, IngestError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    let mut position = 0;
    for file in files {
        for line in std::fs::read_to_string(&file)?.lines() {
            position += 1;
            if line.trim().is_empty() {
                continue;
            }
            out.push((position, serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))));
        }
    }
    Ok(out)
}

/// String or number at `pointer`; the first element when it is an array.
fn text_at(item: &Value, pointer: &str) -> Option<String> {
    let v = item.pointer(pointer)?;
    let v = match v {
        Value::Array(a) => a.first()?,
        other => other,
    };
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn int_at(item: &Value, pointer: &str) -> Result<Option<i64>, String> {
    match item.pointer(pointer) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n.as_i64().map(Some).ok_or_else(|| format!("{pointer} is not an integer")),
        Some(Value::String(s)) => {
            // accepts "1749" and ISO dates such as "1749-01-01"
            let digits: String = s.trim().chars().take_while(|c| c.is_ascii_digit() || *c == '-').collect();
            let year = digits.trim_start_matches('-').split('-').next().unwrap_or("");
            let sign = if digits.starts_with('-') { -1 } else { 1 };
            year.parse::<i64>().map(|y| Some(sign * y)).map_err(|_| format!("{pointer} is not a number: {s:?}"))
        }
        Some(_) => Err(format!("{pointer} has an unexpected type")),
    }
}

fn normalize(item: &Value, fields: &FieldMapping) -> Result<Artwork, String> {
    if !item.is_object() {
        return Err("record is not an object".into());
    }
    let id = text_at(item, &fields.id).ok_or("missing id")?;
    let image_ref = text_at(item, &fields.image_ref).ok_or("missing image reference")?;
    let start = int_at(item, &fields.year_start)?;
    let end = int_at(item, &fields.year_end)?;
    let production_year = match (start, end) {
        (Some(s), Some(e)) if s <= e => Some(YearRange { start: s as i32, end: e as i32 }),
        (Some(s), Some(e)) => return Err(format!("production year range {s}..{e} is reversed")),
        (Some(y), None) | (None, Some(y)) => Some(YearRange { start: y as i32, end: y as i32 }),
        (None, None) => None,
    };
    let dim = |pointer: &str| -> Result<Option<u32>, String> {
        match int_at(item, pointer)? {
            None => Ok(None),
            Some(v) if v > 0 && v <= u32::MAX as i64 => Ok(Some(v as u32)),
            Some(v) => Err(format!("image dimension {v} must be positive")),
        }
    };
    let palette = match item.pointer(&fields.palette) {
        None | Some(Value::Null) => None,
        Some(Value::Array(colors)) => {
            let mut out = Vec::with_capacity(colors.len());
            for c in colors {
                let hex = c.as_str().ok_or("palette entries must be strings")?;
                out.push(normalize_hex(hex).ok_or_else(|| format!("invalid palette color {hex:?}"))?);
            }
            Some(out)
        }
        Some(_) => return Err("palette must be an array".into()),
    };
    Ok(Artwork {
        id,
        title: text_at(item, &fields.title).unwrap_or_default(),
        artist: text_at(item, &fields.artist).unwrap_or_default(),
        production_year,
        technique: text_at(item, &fields.technique).unwrap_or_default(),
        image_ref,
        image_width: dim(&fields.image_width)?,
        image_height: dim(&fields.image_height)?,
        palette,
    })
}

fn normalize_hex(s: &str) -> Option<String> {
    let body = s.trim().trim_start_matches('#');
    if body.len() == 6 && body.chars().all(|c| c.is_ascii_hexdigit()) {
        Some(format!("#{}", body.to_ascii_lowercase()))
    } else {
        None
    }
}
