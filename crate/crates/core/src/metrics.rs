//! Detection quality evaluation: confidence filtering, greedy matching against
//! ground truth and all-points interpolated average precision.
//!
//! Matching follows the COCO convention: within one (artwork, label) group,
//! predictions are visited in descending confidence (ties by ascending id) and
//! each claims the still-unmatched ground truth with the highest IoU at or above
//! the threshold. AP is the area under the monotone precision envelope over
//! every recall point, with no fixed recall sampling.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{iou, BoundingBox};
use crate::ingestion::{detection_digest, Detection};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("confidence cutoff {0} outside [0, 1]")]
    CutoffOutOfRange(f64),
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything with a ranked box that can be scored against ground truth.
pub trait Scored {
    fn id(&self) -> &str;
    fn artwork_id(&self) -> &str;
    fn label(&self) -> &str;
    fn bbox(&self) -> &BoundingBox;
    fn confidence(&self) -> f64;
}

impl Scored for Detection {
    fn id(&self) -> &str {
        &self.id
    }
    fn artwork_id(&self) -> &str {
        &self.artwork_id
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }
    fn confidence(&self) -> f64 {
        self.confidence
    }
}

impl<T: Scored + ?Sized> Scored for &T {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn artwork_id(&self) -> &str {
        (**self).artwork_id()
    }
    fn label(&self) -> &str {
        (**self).label()
    }
    fn bbox(&self) -> &BoundingBox {
        (**self).bbox()
    }
    fn confidence(&self) -> f64 {
        (**self).confidence()
    }
}

/// A prediction that is not tied to the browse taxonomy (e.g. "person" on an
/// external benchmark).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub artwork_id: String,
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Scored for Prediction {
    fn id(&self) -> &str {
        &self.id
    }
    fn artwork_id(&self) -> &str {
        &self.artwork_id
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }
    fn confidence(&self) -> f64 {
        self.confidence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub artwork_id: String,
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

/// Flat line record shared by the ground-truth and prediction files.
#[derive(Debug, Deserialize)]
struct BoxRecord {
    artwork_id: String,
    label: String,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    confidence: Option<f64>,
}

impl BoxRecord {
    fn parse(line: &str, line_no: usize) -> Result<(Self, BoundingBox), MetricsError> {
        let rec: BoxRecord =
            serde_json::from_str(line).map_err(|e| MetricsError::Record { line: line_no, reason: e.to_string() })?;
        if rec.label.is_empty() {
            return Err(MetricsError::Record { line: line_no, reason: "empty label".into() });
        }
        let bbox = BoundingBox::new(rec.x_min, rec.y_min, rec.x_max, rec.y_max)
            .map_err(|e| MetricsError::Record { line: line_no, reason: e.to_string() })?;
        Ok((rec, bbox))
    }
}

fn content_lines(reader: impl BufRead) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
}

/// Reads line-delimited ground truth records
/// `{"artwork_id", "label", "x_min", "y_min", "x_max", "y_max"}`.
pub fn read_ground_truth(reader: impl BufRead) -> Result<Vec<GroundTruthBox>, MetricsError> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(reader) {
        let (rec, bbox) = BoxRecord::parse(&line?, line_no)?;
        out.push(GroundTruthBox { artwork_id: rec.artwork_id, label: rec.label, bbox });
    }
    Ok(out)
}

/// Reads predictions in the detection record format. Labels are free text;
/// ids are the same content digests the importer assigns.
pub fn read_predictions(reader: impl BufRead) -> Result<Vec<Prediction>, MetricsError> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(reader) {
        let (rec, bbox) = BoxRecord::parse(&line?, line_no)?;
        let confidence = rec
            .confidence
            .ok_or_else(|| MetricsError::Record { line: line_no, reason: "missing confidence".into() })?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(MetricsError::Record {
                line: line_no,
                reason: format!("confidence {confidence} outside [0, 1]"),
            });
        }
        out.push(Prediction {
            id: detection_digest(&rec.artwork_id, &rec.label, &bbox, confidence),
            artwork_id: rec.artwork_id,
            label: rec.label,
            bbox,
            confidence,
        });
    }
    Ok(out)
}

/// Keeps detections with confidence at or above `cutoff`, preserving order.
pub fn filter_by_confidence<P: Scored + Clone>(dets: &[P], cutoff: f64) -> Result<Vec<P>, MetricsError> {
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(MetricsError::CutoffOutOfRange(cutoff));
    }
    Ok(dets.iter().filter(|d| d.confidence() >= cutoff).cloned().collect())
}

/// Ranking order: descending confidence, then ascending id.
pub fn rank_order<P: Scored + ?Sized>(a: &P, b: &P) -> Ordering {
    b.confidence().total_cmp(&a.confidence()).then_with(|| a.id().cmp(b.id()))
}

/// Greedy matching for one (artwork, label) group. Returns, in ranking order,
/// each prediction paired with the index into `gts` it matched.
pub fn match_detections<'a, P: Scored>(
    preds: &'a [P],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
) -> Vec<(&'a P, Option<usize>)> {
    let mut order: Vec<&P> = preds.iter().collect();
    order.sort_by(|a, b| rank_order(*a, *b));
    let mut used = vec![false; gts.len()];
    order
        .into_iter()
        .map(|pred| {
            let mut best: Option<(usize, f64)> = None;
            for (gi, gt) in gts.iter().enumerate() {
                if used[gi] {
                    continue;
                }
                let overlap = iou(pred.bbox(), &gt.bbox);
                if overlap < iou_threshold || overlap <= 0.0 {
                    continue;
                }
                if best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((gi, overlap));
                }
            }
            if let Some((gi, _)) = best {
                used[gi] = true;
            }
            (pred, best.map(|(gi, _)| gi))
        })
        .collect()
}

/// One ranked prediction's outcome across all artworks of a label.
struct RankedOutcome<'a> {
    id: &'a str,
    confidence: f64,
    true_positive: bool,
}

fn ranked_outcomes<'a, P: Scored>(
    preds: &'a [P],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
) -> Vec<RankedOutcome<'a>> {
    let mut pred_groups: BTreeMap<&str, Vec<&'a P>> = BTreeMap::new();
    for p in preds {
        pred_groups.entry(p.artwork_id()).or_default().push(p);
    }
    let mut gt_groups: BTreeMap<&str, Vec<GroundTruthBox>> = BTreeMap::new();
    for g in gts {
        gt_groups.entry(g.artwork_id.as_str()).or_default().push(g.clone());
    }

    let mut outcomes = Vec::with_capacity(preds.len());
    for (artwork, group) in pred_groups {
        let group_gts = gt_groups.get(artwork).map(Vec::as_slice).unwrap_or(&[]);
        for (pred, matched) in match_detections(&group, group_gts, iou_threshold) {
            let pred: &'a P = pred;
            outcomes.push(RankedOutcome {
                id: pred.id(),
                confidence: pred.confidence(),
                true_positive: matched.is_some(),
            });
        }
    }
    outcomes.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then_with(|| a.id.cmp(b.id)));
    outcomes
}

/// Raw (recall, precision) after each ranked prediction.
pub fn precision_recall<P: Scored>(preds: &[P], gts: &[GroundTruthBox], iou_threshold: f64) -> Vec<(f64, f64)> {
    let n_gt = gts.len() as f64;
    let mut tp = 0usize;
    ranked_outcomes(preds, gts, iou_threshold)
        .iter()
        .enumerate()
        .map(|(i, o)| {
            if o.true_positive {
                tp += 1;
            }
            let recall = if n_gt > 0.0 { tp as f64 / n_gt } else { 0.0 };
            (recall, tp as f64 / (i + 1) as f64)
        })
        .collect()
}

/// All-points interpolated AP for a single label. Predictions may span
/// artworks; matching happens per artwork.
pub fn average_precision<P: Scored>(preds: &[P], gts: &[GroundTruthBox], iou_threshold: f64) -> f64 {
    match (preds.is_empty(), gts.is_empty()) {
        (true, true) => return 1.0,
        (_, true) | (true, false) => return 0.0,
        _ => {}
    }
    ap_from_curve(&precision_recall(preds, gts, iou_threshold))
}

fn ap_from_curve(curve: &[(f64, f64)]) -> f64 {
    // running max from the right gives the precision envelope
    let mut envelope: Vec<f64> = curve.iter().map(|&(_, p)| p).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, &(recall, _)) in curve.iter().enumerate() {
        if recall > prev_recall {
            ap += (recall - prev_recall) * envelope[i];
            prev_recall = recall;
        }
    }
    ap
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub iou_threshold: f64,
    pub ap: f64,
    /// (recall, precision) after each ranked prediction.
    pub pr_points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: Option<String>,
    pub predictions: usize,
    pub ground_truths: usize,
    pub per_threshold: Vec<ThresholdResult>,
    pub mean_ap: f64,
}

impl EvalReport {
    pub fn ap_at(&self, threshold: f64) -> Option<f64> {
        self.per_threshold.iter().find(|t| (t.iou_threshold - threshold).abs() < 1e-9).map(|t| t.ap)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(label) = &self.label {
            out.push_str(&format!("label: {label}\n"));
        }
        out.push_str(&format!("predictions: {}  ground truths: {}\n", self.predictions, self.ground_truths));
        for t in &self.per_threshold {
            out.push_str(&format!("AP@{:.2}  {:.4}\n", t.iou_threshold, t.ap));
        }
        out.push_str(&format!("AP@[.50:.95]  {:.4}\n", self.mean_ap));
        out
    }
}

/// AP at each COCO threshold and their mean, for one label.
pub fn coco_ap<P: Scored>(preds: &[P], gts: &[GroundTruthBox]) -> EvalReport {
    let per_threshold: Vec<ThresholdResult> = coco_thresholds()
        .into_iter()
        .map(|t| ThresholdResult {
            iou_threshold: t,
            ap: average_precision(preds, gts, t),
            pr_points: precision_recall(preds, gts, t),
        })
        .collect();
    let mean_ap = per_threshold.iter().map(|t| t.ap).sum::<f64>() / per_threshold.len() as f64;
    let label = preds.first().map(|p| p.label().to_string()).or_else(|| gts.first().map(|g| g.label.clone()));
    EvalReport { label, predictions: preds.len(), ground_truths: gts.len(), per_threshold, mean_ap }
}
