//! Independent reference implementations and generators shared by the
//! integration tests. Nothing here calls the code under test beyond plain
//! constructors.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;

use artlens_core::geometry::BoundingBox;
use artlens_core::metrics::{GroundTruthBox, Prediction};

/// Integer box `[x0, x1) x [y0, y1)` on the unit pixel grid.
pub type GridBox = [i64; 4];

pub fn to_box(b: GridBox) -> BoundingBox {
    BoundingBox::new(b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64).unwrap()
}

/// Intersection and union cell counts by visiting every cell.
pub fn grid_counts(a: GridBox, b: GridBox) -> (u64, u64) {
    let lo_x = a[0].min(b[0]);
    let hi_x = a[2].max(b[2]);
    let lo_y = a[1].min(b[1]);
    let hi_y = a[3].max(b[3]);
    let inside = |r: GridBox, x: i64, y: i64| x >= r[0] && x < r[2] && y >= r[1] && y < r[3];
    let (mut inter, mut union) = (0, 0);
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    (inter, union)
}

pub fn grid_iou(a: GridBox, b: GridBox) -> f64 {
    let (inter, union) = grid_counts(a, b);
    if inter == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn random_grid_box(rng: &mut impl Rng, extent: i64) -> GridBox {
    let x0 = rng.random_range(0..extent);
    let y0 = rng.random_range(0..extent);
    let x1 = rng.random_range(x0 + 1..=extent);
    let y1 = rng.random_range(y0 + 1..=extent);
    [x0, y0, x1, y1]
}

/// A small AP instance: grid boxes on a few artworks, coarse confidences so
/// that ties occur.
pub struct ApInstance {
    pub preds: Vec<Prediction>,
    pub gts: Vec<GroundTruthBox>,
    pub pred_boxes: Vec<GridBox>,
    pub gt_boxes: Vec<GridBox>,
}

pub fn random_ap_instance(rng: &mut impl Rng, max_gt: usize, max_pred: usize) -> ApInstance {
    let artworks = ["a", "b", "c"];
    let n_gt = rng.random_range(0..=max_gt);
    let n_pred = rng.random_range(0..=max_pred);
    let mut gts = Vec::new();
    let mut gt_boxes = Vec::new();
    for _ in 0..n_gt {
        let b = random_grid_box(rng, 12);
        gts.push(GroundTruthBox {
            artwork_id: artworks[rng.random_range(0..artworks.len())].into(),
            label: "person".into(),
            bbox: to_box(b),
        });
        gt_boxes.push(b);
    }
    let mut preds = Vec::new();
    let mut pred_boxes = Vec::new();
    for i in 0..n_pred {
        // half of the predictions perturb a ground truth so matches happen
        let (b, artwork_id) = if !gt_boxes.is_empty() && rng.random_bool(0.5) {
            let g = rng.random_range(0..gt_boxes.len());
            let mut b = gt_boxes[g];
            b[2] += rng.random_range(0..2);
            b[3] += rng.random_range(0..2);
            (b, gts[g].artwork_id.clone())
        } else {
            (random_grid_box(rng, 12), artworks[rng.random_range(0..artworks.len())].to_string())
        };
        pred_boxes.push(b);
        preds.push(Prediction {
            id: format!("p{i:02}"),
            artwork_id,
            label: "person".into(),
            bbox: to_box(b),
            confidence: rng.random_range(0..=20) as f64 / 20.0,
        });
    }
    ApInstance { preds, gts, pred_boxes, gt_boxes }
}

/// AP computed from first principles: rank, match greedily with grid IoU,
/// then sum `1/n_gt * max precision at or after` over every true positive.
pub fn oracle_ap(inst: &ApInstance, threshold: f64) -> f64 {
    let n_gt = inst.gts.len();
    if n_gt == 0 {
        return if inst.preds.is_empty() { 1.0 } else { 0.0 };
    }
    let mut order: Vec<usize> = (0..inst.preds.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&inst.preds[a], &inst.preds[b]);
        pb.confidence.partial_cmp(&pa.confidence).unwrap().then(pa.id.cmp(&pb.id))
    });
    let mut taken = vec![false; n_gt];
    let mut hits = Vec::new();
    for &pi in &order {
        let p = &inst.preds[pi];
        let mut best: Option<(usize, f64)> = None;
        for (gi, &used) in taken.iter().enumerate() {
            if used || inst.gts[gi].artwork_id != p.artwork_id {
                continue;
            }
            let v = grid_iou(inst.pred_boxes[pi], inst.gt_boxes[gi]);
            if v > 0.0 && v >= threshold && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
        }
        hits.push(best.is_some());
    }
    let mut tp = 0;
    let precision: Vec<f64> = hits
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            tp += usize::from(h);
            tp as f64 / (i + 1) as f64
        })
        .collect();
    let mut ap = 0.0;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            let best_after = precision[i..].iter().cloned().fold(0.0, f64::max);
            ap += best_after / n_gt as f64;
        }
    }
    ap
}

/// Per-label counts for a seeded synthetic corpus.
pub fn label_counts(rng: &mut impl Rng, labels: &[String], max: usize) -> HashMap<String, usize> {
    labels.iter().map(|l| (l.clone(), rng.random_range(0..=max))).collect()
}

/// Detections over `labels` with the given per-label counts, random boxes
/// and confidences, spread over `artworks` artworks. Ids follow the normal
/// digest so ties break the same way as imported data.
pub fn synthetic_detections(
    rng: &mut impl Rng,
    counts: &[(String, usize)],
    artworks: usize,
) -> Vec<artlens_core::ingestion::Detection> {
    use artlens_core::ingestion::{detection_digest, Detection};
    use artlens_core::taxonomy::Category;
    let mut out = Vec::new();
    for (label, n) in counts {
        for _ in 0..*n {
            let artwork_id = format!("A{:05}", rng.random_range(0..artworks));
            let x = rng.random_range(0..400) as f64;
            let y = rng.random_range(0..400) as f64;
            let bbox = BoundingBox::new(x, y, x + rng.random_range(1..200) as f64, y + rng.random_range(1..200) as f64)
                .unwrap();
            // coarse confidences force ties
            let confidence = rng.random_range(0..=1000) as f64 / 1000.0;
            out.push(Detection {
                id: detection_digest(&artwork_id, label, &bbox, confidence),
                artwork_id,
                label: label.clone(),
                category: Category::Nature,
                bbox,
                confidence,
            });
        }
    }
    out
}

/// Labels `L000`, `L001`, ...
pub fn synthetic_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("L{i:03}")).collect()
}

pub fn fixtures() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Catalog holding the fixture paintings and the detections of
/// `detection_files` (names under `fixtures/detections`), not yet curated.
pub async fn fixture_catalog(
    root: &std::path::Path,
    detection_files: &[&str],
) -> (artlens_core::catalog::Catalog, artlens_core::ingestion::ImageCache) {
    use artlens_core::catalog::{Catalog, OpenMode};
    use artlens_core::ingestion::{
        fetch_artworks, import_detections, ingest_artworks, CollectionConfig, ImageCache, RetryPolicy,
    };
    use artlens_core::taxonomy::Taxonomy;

    let taxonomy = std::sync::Arc::new(Taxonomy::default_table());
    let catalog = Catalog::open(root.join("catalog"), taxonomy.clone(), OpenMode::ReadWrite).unwrap();
    let config =
        CollectionConfig { fixture_path: Some(fixtures().join("collection/artworks.jsonl")), ..Default::default() };
    let client = reqwest::Client::new();
    let fetched = fetch_artworks(&config, Some("painting"), &client).await.unwrap();
    let cache = ImageCache::new(root.join("cache"), client, RetryPolicy::immediate(1)).unwrap();
    ingest_artworks(fetched.artworks, &cache, &catalog).await.unwrap();
    for name in detection_files {
        let file = std::fs::File::open(fixtures().join("detections").join(name)).unwrap();
        let outcome = import_detections(std::io::BufReader::new(file), &taxonomy).unwrap();
        assert!(outcome.rejected.is_empty(), "{:?}", outcome.rejected);
        catalog.put_detections(&outcome.detections).unwrap();
    }
    (catalog, cache)
}
