mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use artlens_core::geometry::{iou, BoundingBox};
use artlens_core::metrics::{
    average_precision, coco_ap, coco_thresholds, filter_by_confidence, read_ground_truth, read_predictions,
    GroundTruthBox, Prediction,
};
use support::*;

#[test]
fn ap_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let inst = random_ap_instance(&mut rng, 8, 12);
        for t in [0.5, 0.75] {
            let got = average_precision(&inst.preds, &inst.gts, t);
            let want = oracle_ap(&inst, t);
            assert!((got - want).abs() <= 1e-9, "case {case} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn iou_matches_pixel_grid_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let a = random_grid_box(&mut rng, 16);
        let b = random_grid_box(&mut rng, 16);
        assert_eq!(iou(&to_box(a), &to_box(b)), grid_iou(a, b), "{a:?} {b:?}");
    }
}

#[test]
fn fixture_evaluation() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/eval");
    let gts = read_ground_truth(std::io::BufReader::new(std::fs::File::open(dir.join("gt.jsonl")).unwrap())).unwrap();
    let preds =
        read_predictions(std::io::BufReader::new(std::fs::File::open(dir.join("preds.jsonl")).unwrap())).unwrap();
    assert_eq!((gts.len(), preds.len()), (4, 6));
    let report = coco_ap(&preds, &gts);
    assert_eq!(report.per_threshold.len(), 10);
    let mean = report.per_threshold.iter().map(|t| t.ap).sum::<f64>() / 10.0;
    assert!((report.mean_ap - mean).abs() < 1e-12);
    for w in report.per_threshold.windows(2) {
        assert!(w[1].ap <= w[0].ap + 1e-12);
    }
}

fn grid_box() -> impl Strategy<Value = GridBox> {
    (0i64..20, 0i64..20, 1i64..12, 1i64..12).prop_map(|(x, y, w, h)| [x, y, x + w, y + h])
}

fn float_box() -> impl Strategy<Value = BoundingBox> {
    (-50.0f64..50.0, -50.0f64..50.0, 0.0f64..40.0, 0.0f64..40.0)
        .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, x + w, y + h).unwrap())
}

fn instance() -> impl Strategy<Value = (Vec<Prediction>, Vec<GroundTruthBox>)> {
    let gts = prop::collection::vec((0usize..2, grid_box()), 0..8);
    let preds = prop::collection::vec((0usize..2, grid_box(), 0u32..=10), 0..12);
    (gts, preds).prop_map(|(gts, preds)| {
        let art = ["a", "b"];
        let gts = gts
            .into_iter()
            .map(|(a, b)| GroundTruthBox { artwork_id: art[a].into(), label: "person".into(), bbox: to_box(b) })
            .collect();
        let preds = preds
            .into_iter()
            .enumerate()
            .map(|(i, (a, b, c))| Prediction {
                id: format!("p{i:02}"),
                artwork_id: art[a].into(),
                label: "person".into(),
                bbox: to_box(b),
                confidence: c as f64 / 10.0,
            })
            .collect();
        (preds, gts)
    })
}

proptest! {
    #[test]
    fn iou_is_symmetric(a in float_box(), b in float_box()) {
        prop_assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn iou_in_unit_interval(a in float_box(), b in float_box()) {
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn iou_identity(a in float_box()) {
        let expected = if a.area() > 0.0 { 1.0 } else { 0.0 };
        prop_assert_eq!(iou(&a, &a), expected);
    }

    #[test]
    fn iou_grid_exact(a in grid_box(), b in grid_box()) {
        prop_assert_eq!(iou(&to_box(a), &to_box(b)), grid_iou(a, b));
    }

    #[test]
    fn ap_in_unit_interval((preds, gts) in instance(), t in 0.05f64..1.0) {
        let ap = average_precision(&preds, &gts, t);
        prop_assert!((0.0..=1.0).contains(&ap), "{}", ap);
    }

    #[test]
    fn ap_does_not_grow_with_threshold((preds, gts) in instance(), lo in 0.05f64..0.95, step in 0.0f64..0.5) {
        let hi = (lo + step).min(1.0);
        prop_assert!(average_precision(&preds, &gts, hi) <= average_precision(&preds, &gts, lo) + 1e-12);
    }

    #[test]
    fn ap_is_invariant_to_monotone_rescaling((preds, gts) in instance(), t in 0.05f64..1.0) {
        let squashed: Vec<Prediction> = preds
            .iter()
            .map(|p| Prediction { confidence: p.confidence * p.confidence * 0.5, ..p.clone() })
            .collect();
        prop_assert_eq!(average_precision(&preds, &gts, t), average_precision(&squashed, &gts, t));
    }

    #[test]
    fn ap_is_invariant_to_input_order((preds, gts) in instance(), t in 0.05f64..1.0) {
        let mut reversed = preds.clone();
        reversed.reverse();
        let mut gts_rev = gts.clone();
        gts_rev.reverse();
        let a = average_precision(&preds, &gts, t);
        let b = average_precision(&reversed, &gts_rev, t);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one(gts in prop::collection::vec(grid_box(), 1..8)) {
        let gts: Vec<GroundTruthBox> = gts
            .into_iter()
            .map(|b| GroundTruthBox { artwork_id: "a".into(), label: "person".into(), bbox: to_box(b) })
            .collect();
        let preds: Vec<Prediction> = gts
            .iter()
            .enumerate()
            .map(|(i, g)| Prediction {
                id: format!("p{i}"),
                artwork_id: "a".into(),
                label: "person".into(),
                bbox: g.bbox,
                confidence: 0.9,
            })
            .collect();
        for t in coco_thresholds() {
            prop_assert_eq!(average_precision(&preds, &gts, t), 1.0);
        }
    }

    #[test]
    fn confidence_filter_keeps_exactly_the_passing(
        (preds, _gts) in instance(),
        cutoff in 0.0f64..=1.0,
    ) {
        let kept = filter_by_confidence(&preds, cutoff).unwrap();
        prop_assert!(kept.iter().all(|p| p.confidence >= cutoff));
        prop_assert_eq!(kept.len(), preds.iter().filter(|p| p.confidence >= cutoff).count());
    }
}
