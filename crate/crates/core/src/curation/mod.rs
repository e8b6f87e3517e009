//! Distribution statistics, balanced per-label subset selection, crop
//! extraction and the end-to-end curation pipeline.

mod crop;
mod palette;
mod pipeline;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ingestion::Detection;
use crate::metrics::rank_order;
use crate::taxonomy::Category;

pub use crop::{crop_rect, extract_crop, pixel_digest, CropImage, CropSkip, ObjectCrop, DEFAULT_MIN_SIDE};
pub use palette::{palette_of, PALETTE_SIZE};
pub use pipeline::{run_pipeline, ImageSource, PipelineConfig, PipelineError, PipelineReport, SkipRecord};

/// Share of detections above which the four largest categories count as skewed.
pub const SKEW_SHARE: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub total_detections: usize,
    pub paintings_with_detections: usize,
    pub per_label: BTreeMap<String, usize>,
    pub per_category: BTreeMap<Category, CategoryCount>,
    /// True when the four largest categories hold more than 70% of detections.
    pub skewed: bool,
}

impl CollectionStats {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "detections: {}\npaintings with detections: {}\n",
            self.total_detections, self.paintings_with_detections
        );
        let mut cats: Vec<_> = self.per_category.iter().collect();
        cats.sort_by(|a, b| b.1.count.cmp(&a.1.count).then(a.0.cmp(b.0)));
        for (cat, c) in cats {
            out.push_str(&format!("  {:<13} {:>8}  {:>6.2}%\n", cat.as_str(), c.count, c.share * 100.0));
        }
        if self.skewed {
            out.push_str("skewed: four categories hold more than 70% of detections\n");
        }
        out
    }
}

pub fn compute_stats(dets: &[Detection]) -> CollectionStats {
    let total = dets.len();
    let mut per_label: BTreeMap<String, usize> = BTreeMap::new();
    let mut counts: BTreeMap<Category, usize> = BTreeMap::new();
    let mut paintings = HashSet::new();
    for d in dets {
        *per_label.entry(d.label.clone()).or_default() += 1;
        *counts.entry(d.category).or_default() += 1;
        paintings.insert(d.artwork_id.as_str());
    }
    let per_category: BTreeMap<Category, CategoryCount> =
        counts.into_iter().map(|(c, count)| (c, CategoryCount { count, share: count as f64 / total as f64 })).collect();
    let mut sizes: Vec<usize> = per_category.values().map(|c| c.count).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let top4: usize = sizes.iter().take(4).sum();
    CollectionStats {
        total_detections: total,
        paintings_with_detections: paintings.len(),
        per_label,
        per_category,
        skewed: total > 0 && top4 as f64 > SKEW_SHARE * total as f64,
    }
}

/// Per-label top-k selection. Ranking is descending confidence with ties
/// broken by ascending detection id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    k_per_label: usize,
}

impl SubsetSpec {
    pub const DEFAULT_K: usize = 100;

    pub fn new(k_per_label: usize) -> Option<Self> {
        (k_per_label >= 1).then_some(Self { k_per_label })
    }

    pub fn k_per_label(&self) -> usize {
        self.k_per_label
    }
}

impl Default for SubsetSpec {
    fn default() -> Self {
        Self { k_per_label: Self::DEFAULT_K }
    }
}

/// Keeps the `k` best detections of every label, sorted by (label, rank).
pub fn select_subset(dets: &[Detection], spec: SubsetSpec) -> Vec<Detection> {
    let mut by_label: HashMap<&str, Vec<&Detection>> = HashMap::new();
    for d in dets {
        by_label.entry(d.label.as_str()).or_default().push(d);
    }
    let mut labels: Vec<&str> = by_label.keys().copied().collect();
    labels.sort_unstable();
    let mut out = Vec::new();
    for label in labels {
        let group = by_label.get_mut(label).expect("label present");
        let k = spec.k_per_label.min(group.len());
        if k < group.len() {
            group.select_nth_unstable_by(k, |a, b| rank_order(*a, *b));
            group.truncate(k);
        }
        group.sort_by(|a, b| rank_order(*a, *b));
        out.extend(group.iter().map(|d| (*d).clone()));
    }
    out
}
