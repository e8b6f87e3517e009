use std::cmp::Ordering;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;

use super::CatalogError;
use crate::ingestion::Detection;

/// Browse order key: descending confidence, then ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankKey {
    pub confidence: f64,
    pub id: String,
}

impl RankKey {
    pub fn of(d: &Detection) -> Self {
        Self { confidence: d.confidence, id: d.id.clone() }
    }

    /// Opaque cursor token for "everything after this key".
    pub fn encode(&self) -> String {
        let raw = format!("{:016x}{}", self.confidence.to_bits(), self.id);
        URL_SAFE_NO_PAD.encode(raw)
    }

    pub fn decode(token: &str) -> Result<Self, CatalogError> {
        let bytes = URL_SAFE_NO_PAD.decode(token).map_err(|_| CatalogError::InvalidCursor)?;
        let raw = String::from_utf8(bytes).map_err(|_| CatalogError::InvalidCursor)?;
        if raw.len() <= 16 || !raw.is_char_boundary(16) {
            return Err(CatalogError::InvalidCursor);
        }
        let (bits, id) = raw.split_at(16);
        let bits = u64::from_str_radix(bits, 16).map_err(|_| CatalogError::InvalidCursor)?;
        let confidence = f64::from_bits(bits);
        if !(0.0..=1.0).contains(&confidence) {
            return Err(CatalogError::InvalidCursor);
        }
        Ok(Self { confidence, id: id.to_string() })
    }
}

impl Eq for RankKey {}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other.confidence.total_cmp(&self.confidence).then_with(|| self.id.cmp(&other.id))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
