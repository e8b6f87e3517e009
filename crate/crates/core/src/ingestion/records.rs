//! Import of precomputed detector output.
//!
//! One JSON object per line:
//! `{"artwork_id": "...", "label": "...", "x_min": 0, "y_min": 0, "x_max": 1, "y_max": 1, "confidence": 0.5}`

use std::collections::HashSet;
use std::io::BufRead;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Detection, IngestError};
use crate::geometry::BoundingBox;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub artwork_id: String,
    pub label: String,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub confidence: f64,
}

impl From<&Detection> for DetectionRecord {
    fn from(d: &Detection) -> Self {
        Self {
            artwork_id: d.artwork_id.clone(),
            label: d.label.clone(),
            x_min: d.bbox.x_min(),
            y_min: d.bbox.y_min(),
            x_max: d.bbox.x_max(),
            y_max: d.bbox.y_max(),
            confidence: d.confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImportOutcome {
    /// Unique detections in first-occurrence order.
    pub detections: Vec<Detection>,
    pub rejected: Vec<RejectedRecord>,
    pub duplicates: usize,
}

/// Validates every record against the taxonomy; bad records are rejected
/// individually, identical records collapse onto one id.
pub fn import_detections(reader: impl BufRead, taxonomy: &Taxonomy) -> Result<ImportOutcome, IngestError> {
    let mut outcome = ImportOutcome::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, taxonomy) {
            Ok(d) => {
                if seen.insert(d.id.clone()) {
                    outcome.detections.push(d);
                } else {
                    outcome.duplicates += 1;
                }
            }
            Err(reason) => {
                warn!("rejected detection record on line {line_no}: {reason}");
                outcome.rejected.push(RejectedRecord { line: line_no, reason });
            }
        }
    }
    Ok(outcome)
}

fn parse_record(line: &str, taxonomy: &Taxonomy) -> Result<Detection, String> {
    let rec: DetectionRecord = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    if rec.artwork_id.is_empty() {
        return Err("empty artwork_id".into());
    }
    let bbox = BoundingBox::new(rec.x_min, rec.y_min, rec.x_max, rec.y_max).map_err(|e| e.to_string())?;
    Detection::new(&rec.artwork_id, &rec.label, bbox, rec.confidence, taxonomy).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(artwork: &str, label: &str, conf: f64) -> String {
        format!(
            "{{\"artwork_id\":\"{artwork}\",\"label\":\"{label}\",\"x_min\":1,\"y_min\":2,\"x_max\":30,\"y_max\":40,\"confidence\":{conf}}}"
        )
    }

    #[test]
    fn imports_valid_records() {
        let t = Taxonomy::default_table();
        let text: Vec<String> = ["Skull", "Star", "Bow", "Man", "Cat"].iter().map(|l| line("a1", l, 0.5)).collect();
        let out = import_detections(text.join("\n").as_bytes(), &t).unwrap();
        assert_eq!(out.detections.len(), 5);
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn unknown_label_rejected_others_kept() {
        let t = Taxonomy::default_table();
        let text = [line("a1", "Skull", 0.5), line("a1", "Unicorn", 0.5), line("a1", "Star", 0.5)].join("\n");
        let out = import_detections(text.as_bytes(), &t).unwrap();
        assert_eq!(out.detections.len(), 2);
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].line, 2);
        assert!(out.rejected[0].reason.contains("Unicorn"));
    }

    #[test]
    fn invalid_values_rejected() {
        let t = Taxonomy::default_table();
        let bad_box = "{\"artwork_id\":\"a\",\"label\":\"Skull\",\"x_min\":9,\"y_min\":2,\"x_max\":3,\"y_max\":40,\"confidence\":0.5}";
        let text = [line("a", "Skull", 1.5), bad_box.to_string(), "not json".into(), line("", "Skull", 0.5)].join("\n");
        let out = import_detections(text.as_bytes(), &t).unwrap();
        assert!(out.detections.is_empty());
        assert_eq!(out.rejected.iter().map(|r| r.line).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn duplicates_collapse() {
        let t = Taxonomy::default_table();
        let text = [line("a", "Skull", 0.5), line("a", "Skull", 0.5)].join("\n");
        let out = import_detections(text.as_bytes(), &t).unwrap();
        assert_eq!(out.detections.len(), 1);
        assert_eq!(out.duplicates, 1);
        let again = import_detections(text.as_bytes(), &t).unwrap();
        assert_eq!(again.detections[0].id, out.detections[0].id);
    }

    #[test]
    fn record_roundtrip() {
        let t = Taxonomy::default_table();
        let out = import_detections(line("a", "Skull", 0.5).as_bytes(), &t).unwrap();
        let rec = DetectionRecord::from(&out.detections[0]);
        let again = import_detections(serde_json::to_string(&rec).unwrap().as_bytes(), &t).unwrap();
        assert_eq!(again.detections, out.detections);
    }
}
