mod common;

use ortk_core::eval::{
    average_precision, confidence_order, evaluate, match_detections, mean_average_precision, prf1, EvalOptions,
    Interpolation, PRCurve,
};
use ortk_core::geometry::iou;
use ortk_core::model::{BoxAA, Dataset, Geometry};
use rand::Rng;

use common::*;

/// Small instance with boxes clustered so that overlaps are common.
fn small_instance(r: &mut rand_chacha::ChaCha8Rng, max_gt: usize, max_det: usize) -> (Vec<BoxAA>, Vec<(BoxAA, f64)>) {
    let n_gt = r.gen_range(0..=max_gt);
    let n_det = r.gen_range(0..=max_det);
    let jitter = |r: &mut rand_chacha::ChaCha8Rng| {
        let x = r.gen_range(0.0..30.0);
        let y = r.gen_range(0.0..30.0);
        BoxAA::new(x, y, x + r.gen_range(5.0..20.0), y + r.gen_range(5.0..20.0)).unwrap()
    };
    let gts = (0..n_gt).map(|_| jitter(r)).collect();
    // Coarse scores so that ties occur.
    let dets = (0..n_det).map(|_| (jitter(r), r.gen_range(0..10) as f64 / 10.0)).collect();
    (gts, dets)
}

#[test]
fn matching_equals_exhaustive_greedy() {
    let mut r = rng(6);
    for case in 0..2000 {
        let (gts, dets) = small_instance(&mut r, 8, 8);
        let thr = [0.1, 0.3, 0.5, 0.75][case % 4];
        let gt_ann: Vec<_> = gts.iter().map(|b| gt_aa(0, *b)).collect();
        let det_ann: Vec<_> = dets.iter().map(|(b, s)| det_aa(0, *b, *s)).collect();
        let m = match_detections(&gt_ann, &det_ann, iou, thr).unwrap();
        let ((tp, fp, fn_), flags) = oracle_greedy(&gts, &dets, thr);
        assert_eq!((m.true_positives(), m.false_positives(), m.false_negatives), (tp, fp, fn_), "case {case}");
        assert_eq!(m.tp, flags, "case {case}");
    }
}

#[test]
fn ap_matches_reference() {
    let mut r = rng(8);
    for case in 0..200 {
        let (gts, dets) = small_instance(&mut r, 8, 20);
        let (_, flags) = oracle_greedy(&gts, &dets, 0.5);
        let curve = PRCurve::from_flags(&flags, gts.len());
        let coco = average_precision(&curve, Interpolation::Coco101);
        let all = average_precision(&curve, Interpolation::AllPoints);
        assert!((coco - oracle_ap_coco(&flags, gts.len())).abs() < 1e-9, "case {case}");
        assert!((all - oracle_ap_allpoints(&flags, gts.len())).abs() < 1e-9, "case {case}");
    }
}

#[test]
fn ap_reference_values() {
    // Perfect ranking.
    let c = PRCurve::from_flags(&[true, true], 2);
    assert_eq!(average_precision(&c, Interpolation::Coco101), 1.0);
    assert_eq!(average_precision(&c, Interpolation::AllPoints), 1.0);
    // FP first, then TP: precision 1/2 at recall 1.
    let c = PRCurve::from_flags(&[false, true], 1);
    assert!((average_precision(&c, Interpolation::AllPoints) - 0.5).abs() < 1e-12);
    assert!((average_precision(&c, Interpolation::Coco101) - 0.5).abs() < 1e-12);
    // Half recall only: 51 of 101 levels at precision 1.
    let c = PRCurve::from_flags(&[true], 2);
    assert!((average_precision(&c, Interpolation::Coco101) - 51.0 / 101.0).abs() < 1e-12);
    assert!((average_precision(&c, Interpolation::AllPoints) - 0.5).abs() < 1e-12);
    assert_eq!(average_precision(&PRCurve::from_flags(&[], 3), Interpolation::Coco101), 0.0);
}

#[test]
fn prf1_reference() {
    let (p, r, f) = prf1(8, 2, 2).unwrap();
    assert!((p - 0.8).abs() < 1e-12 && (r - 0.8).abs() < 1e-12 && (f - 0.8).abs() < 1e-12);
    assert_eq!(prf1(0, 0, 0).unwrap(), (0.0, 0.0, 0.0));
    assert!(prf1(-1, 0, 0).is_err());
}

#[test]
fn table_aggregate() {
    let aps = [0.182, 0.655, 0.939, 0.886, 0.868, 0.471, 0.506, 0.894];
    assert!((mean_average_precision(&aps) - 0.675).abs() < 0.0005);
}

fn rescale(det: &Dataset, f: impl Fn(f64) -> f64) -> Dataset {
    let mut out = det.clone();
    for frame in &mut out.frames {
        for a in &mut frame.annotations {
            a.score = a.score.map(&f);
        }
    }
    out
}

#[test]
fn monotone_rescaling_preserves_report() {
    for seed in 0..20 {
        let (gt, det) = separated_scene(&mut rng(seed), 30, 3);
        let opts = EvalOptions::default();
        let base = evaluate(&gt, &det, iou, &opts).unwrap();
        for f in [|s: f64| s * s * s, |s: f64| 0.1 + 0.5 * s, |s: f64| s.sqrt()] {
            let other = evaluate(&gt, &rescale(&det, f), iou, &opts).unwrap();
            assert_eq!(base.rows.iter().map(|r| r.ap).collect::<Vec<_>>(), other.rows.iter().map(|r| r.ap).collect::<Vec<_>>());
            assert_eq!(base.map_50, other.map_50);
            assert_eq!(base.map_50_95, other.map_50_95);
            assert_eq!(base.f1, other.f1);
        }
    }
}

#[test]
fn oracle_detections_score_perfectly() {
    for seed in 0..5 {
        let (gt, _) = separated_scene(&mut rng(seed), 40, 4);
        let mut det = gt.clone();
        for frame in &mut det.frames {
            for a in &mut frame.annotations {
                a.score = Some(0.9);
            }
        }
        let rep = evaluate(&gt, &det, iou, &EvalOptions::default()).unwrap();
        assert_eq!(rep.map_50, 1.0);
        assert_eq!(rep.map_50_95, 1.0);
        assert_eq!(rep.f1, 1.0);
    }
}

#[test]
fn map_50_95_never_exceeds_map_50_on_separated_scenes() {
    for seed in 0..30 {
        let (gt, det) = separated_scene(&mut rng(100 + seed), 30, 3);
        for interpolation in [Interpolation::Coco101, Interpolation::AllPoints] {
            let opts = EvalOptions {
                interpolation,
                ..EvalOptions::default()
            };
            let rep = evaluate(&gt, &det, iou, &opts).unwrap();
            assert!(rep.map_50_95 <= rep.map_50 + 1e-12, "seed {seed}");
            for row in &rep.rows {
                assert!((0.0..=1.0).contains(&row.ap));
            }
        }
    }
}

#[test]
fn duplicating_detections_never_raises_ap_on_separated_scenes() {
    for seed in 0..30 {
        let (gt, det) = separated_scene(&mut rng(200 + seed), 30, 3);
        let mut dup = det.clone();
        for frame in &mut dup.frames {
            let copies = frame.annotations.clone();
            frame.annotations.extend(copies);
        }
        let opts = EvalOptions::default();
        let a = evaluate(&gt, &det, iou, &opts).unwrap();
        let b = evaluate(&gt, &dup, iou, &opts).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!(y.ap <= x.ap + 1e-12, "seed {seed} class {}", x.class_id);
        }
    }
}

#[test]
fn frame_order_does_not_matter() {
    for seed in 0..10 {
        let (gt, det) = separated_scene(&mut rng(300 + seed), 25, 3);
        let mut shuffled_gt = gt.clone();
        let mut shuffled_det = det.clone();
        shuffled_gt.frames.reverse();
        shuffled_det.frames.rotate_left(7);
        let opts = EvalOptions::default();
        let a = evaluate(&gt, &det, iou, &opts).unwrap();
        let b = evaluate(&shuffled_gt, &shuffled_det, iou, &opts).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn class_without_gt_excluded_unless_strict() {
    let cat = catalog(3);
    let b = BoxAA::new(0.0, 0.0, 10.0, 10.0).unwrap();
    let gt = Dataset::new(cat.clone(), vec![frame_with("a", 100, 100, vec![gt_aa(0, b)])]).unwrap();
    let det = Dataset::new(
        cat,
        vec![frame_with("a", 100, 100, vec![det_aa(0, b, 0.9), det_aa(2, b, 0.8)])],
    )
    .unwrap();
    let rep = evaluate(&gt, &det, iou, &EvalOptions::default()).unwrap();
    assert_eq!(rep.map_50, 1.0);
    assert!(rep.rows[2].no_gt && rep.rows[1].no_gt);
    assert!(rep.to_table(true).contains("no gt"));
    let strict = evaluate(&gt, &det, iou, &EvalOptions { strict: true, ..EvalOptions::default() }).unwrap();
    assert!((strict.map_50 - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn evaluation_errors() {
    let cat = catalog(2);
    let b = BoxAA::new(0.0, 0.0, 10.0, 10.0).unwrap();
    let gt = Dataset::new(cat.clone(), vec![frame_with("a", 100, 100, vec![gt_aa(0, b)])]).unwrap();
    let stray = Dataset::new(cat.clone(), vec![frame_with("zz", 100, 100, vec![det_aa(0, b, 0.5)])]).unwrap();
    assert!(evaluate(&gt, &stray, iou, &EvalOptions::default()).is_err());
    let unscored = Dataset::new(cat, vec![frame_with("a", 100, 100, vec![gt_aa(0, b)])]).unwrap();
    assert!(evaluate(&gt, &unscored, iou, &EvalOptions::default()).is_err());
    let other = Dataset::new(catalog(3), vec![]).unwrap();
    assert!(evaluate(&gt, &other, iou, &EvalOptions::default()).is_err());
}

#[test]
fn confidence_order_is_stable() {
    assert_eq!(confidence_order(&[0.5, 0.9, 0.5, 0.9]), vec![1, 3, 0, 2]);
}

#[test]
fn rotated_geometry_evaluates() {
    let cat = catalog(1);
    let r = BoxAA::new(0.0, 0.0, 10.0, 4.0).unwrap().to_rot();
    let mut rf = ortk_core::Frame::new("a", 100, 100);
    rf.annotations = vec![ortk_core::Annotation::ground_truth(0, Geometry::Rot(r))];
    let gt = Dataset::new(cat.clone(), vec![rf.clone()]).unwrap();
    rf.annotations[0].score = Some(0.7);
    let det = Dataset::new(cat, vec![rf]).unwrap();
    let rep = evaluate(&gt, &det, iou, &EvalOptions::default()).unwrap();
    assert_eq!(rep.map_50, 1.0);
}
