//! Independent reference implementations used to check the library.
//! Nothing here calls into the code paths it is checking.

#![allow(dead_code)]

use ortk_core::model::{Annotation, BoxAA, BoxRot, ClassCatalog, Dataset, Frame, Geometry};
use ortk_core::pointcloud::{Point, PointCloud, RangeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- geometry

/// Rectangle overlap by interval arithmetic.
pub fn analytic_iou_aa(a: &BoxAA, b: &BoxAA) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn inside_rot(b: &BoxRot, x: f64, y: f64) -> bool {
    let (dx, dy) = (x - b.cx, y - b.cy);
    let (s, c) = b.theta.sin_cos();
    let along = dx * c + dy * s;
    let across = -dx * s + dy * c;
    along.abs() <= b.w / 2.0 && across.abs() <= b.h / 2.0
}

fn rot_extent(b: &BoxRot) -> (f64, f64, f64, f64) {
    let (s, c) = b.theta.sin_cos();
    let hx = (c * b.w / 2.0).abs() + (s * b.h / 2.0).abs();
    let hy = (s * b.w / 2.0).abs() + (c * b.h / 2.0).abs();
    (b.cx - hx, b.cy - hy, b.cx + hx, b.cy + hy)
}

/// Monte-Carlo IoU estimate from uniform samples over the joint bounding
/// rectangle.
pub fn monte_carlo_iou_rot(a: &BoxRot, b: &BoxRot, samples: usize, seed: u64) -> f64 {
    let (ax0, ay0, ax1, ay1) = rot_extent(a);
    let (bx0, by0, bx1, by1) = rot_extent(b);
    let (x0, y0, x1, y1) = (ax0.min(bx0), ay0.min(by0), ax1.max(bx1), ay1.max(by1));
    let mut r = rng(seed);
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..samples {
        let x = r.gen_range(x0..x1);
        let y = r.gen_range(y0..y1);
        let (ia, ib) = (inside_rot(a, x, y), inside_rot(b, x, y));
        both += usize::from(ia && ib);
        either += usize::from(ia || ib);
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

pub fn random_rot(r: &mut ChaCha8Rng) -> BoxRot {
    BoxRot::new(
        r.gen_range(-5.0..5.0),
        r.gen_range(-5.0..5.0),
        r.gen_range(0.5..6.0),
        r.gen_range(0.5..6.0),
        r.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2),
    )
    .unwrap()
}

/// Random rotated pair with guaranteed centre proximity so most pairs
/// overlap.
pub fn random_rot_pair(r: &mut ChaCha8Rng) -> (BoxRot, BoxRot) {
    let a = random_rot(r);
    let mut b = random_rot(r);
    b.cx = a.cx + r.gen_range(-2.0..2.0);
    b.cy = a.cy + r.gen_range(-2.0..2.0);
    (a, b)
}

pub fn random_aa(r: &mut ChaCha8Rng, extent: f64) -> BoxAA {
    let x = r.gen_range(0.0..extent);
    let y = r.gen_range(0.0..extent);
    let w = r.gen_range(0.0..extent / 2.0);
    let h = r.gen_range(0.0..extent / 2.0);
    BoxAA::new(x, y, x + w, y + h).unwrap()
}

// -------------------------------------------------------------- evaluation

/// Greedy matching written independently: repeatedly pick the remaining
/// detection with the highest score (earliest index on ties), then scan all
/// ground truths for the best unmatched IoU. Returns (tp, fp, fn) and the
/// TP flag per detection in processing order.
pub fn oracle_greedy(
    gts: &[BoxAA],
    dets: &[(BoxAA, f64)],
    threshold: f64,
) -> ((usize, usize, usize), Vec<bool>) {
    let mut remaining: Vec<usize> = (0..dets.len()).collect();
    let mut matched = vec![false; gts.len()];
    let mut flags = Vec::new();
    while !remaining.is_empty() {
        let mut pick = 0;
        for k in 1..remaining.len() {
            if dets[remaining[k]].1 > dets[remaining[pick]].1 {
                pick = k;
            }
        }
        let d = remaining.remove(pick);
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        for (g, gt) in gts.iter().enumerate() {
            let v = analytic_iou_aa(&dets[d].0, gt);
            if !matched[g] && v >= threshold && v > best_iou {
                best = Some(g);
                best_iou = v;
            }
        }
        if let Some(g) = best {
            matched[g] = true;
        }
        flags.push(best.is_some());
    }
    let tp = flags.iter().filter(|&&f| f).count();
    ((tp, flags.len() - tp, gts.len() - tp), flags)
}

/// 101-point interpolated AP straight from the definition: for each recall
/// level r, the best precision among ranks whose recall is at least r.
pub fn oracle_ap_coco(flags: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut points = Vec::new();
    let mut tp = 0.0;
    for (i, &f) in flags.iter().enumerate() {
        if f {
            tp += 1.0;
        }
        points.push((tp / n_gt as f64, tp / (i as f64 + 1.0)));
    }
    let mut total = 0.0;
    for step in 0..=100 {
        let r = step as f64 / 100.0;
        let best = points
            .iter()
            .filter(|(rec, _)| *rec >= r)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += best;
    }
    total / 101.0
}

/// All-points AP from the definition: sum over each recall increment of the
/// best precision reachable at or beyond that recall.
pub fn oracle_ap_allpoints(flags: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut points = Vec::new();
    let mut tp = 0.0;
    for (i, &f) in flags.iter().enumerate() {
        if f {
            tp += 1.0;
        }
        points.push((tp / n_gt as f64, tp / (i as f64 + 1.0)));
    }
    let mut ap = 0.0;
    let mut prev = 0.0;
    for (k, &(rec, _)) in points.iter().enumerate() {
        if rec > prev {
            let best = points[k..].iter().map(|(_, p)| *p).fold(0.0, f64::max);
            ap += (rec - prev) * best;
            prev = rec;
        }
    }
    ap
}

// ----------------------------------------------------------------- anchors

pub fn oracle_ratio_distance(b: [f64; 2], a: [f64; 2]) -> f64 {
    let r = [b[0] / a[0], a[0] / b[0], b[1] / a[1], a[1] / b[1]]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    1.0 - r
}

/// Box covered when some anchor is within `thr` in every size ratio.
pub fn oracle_bpr(boxes: &[[f64; 2]], anchors: &[[f64; 2]], thr: f64) -> f64 {
    let covered = boxes
        .iter()
        .filter(|b| {
            anchors.iter().any(|a| {
                b[0] / a[0] < thr && a[0] / b[0] < thr && b[1] / a[1] < thr && a[1] / b[1] < thr
            })
        })
        .count();
    covered as f64 / boxes.len() as f64
}

/// Enumerates every split of `boxes` into two non-empty groups and returns
/// the means of the split with lowest total distance to its means.
pub fn oracle_two_means(boxes: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let n = boxes.len();
    assert!((2..=16).contains(&n));
    let mut best = (f64::INFINITY, [0.0; 2], [0.0; 2]);
    for mask in 1u32..(1 << n) - 1 {
        if mask & 1 == 0 {
            continue;
        }
        let mut groups = [vec![], vec![]];
        for (i, b) in boxes.iter().enumerate() {
            groups[((mask >> i) & 1) as usize].push(*b);
        }
        let mean = |g: &[[f64; 2]]| {
            let n = g.len() as f64;
            [g.iter().map(|b| b[0]).sum::<f64>() / n, g.iter().map(|b| b[1]).sum::<f64>() / n]
        };
        let (m0, m1) = (mean(&groups[0]), mean(&groups[1]));
        let cost: f64 = groups[0].iter().map(|&b| oracle_ratio_distance(b, m0)).sum::<f64>()
            + groups[1].iter().map(|&b| oracle_ratio_distance(b, m1)).sum::<f64>();
        if cost < best.0 {
            best = (cost, m0, m1);
        }
    }
    let (a, b) = (best.1, best.2);
    if a[0] * a[1] <= b[0] * b[1] {
        (a, b)
    } else {
        (b, a)
    }
}

// -------------------------------------------------------------- pointcloud

pub fn random_cloud(r: &mut ChaCha8Rng, n: usize, lo: f32, hi: f32) -> PointCloud {
    PointCloud::new(
        "rand",
        (0..n)
            .map(|_| {
                Point::new(r.gen_range(lo..hi), r.gen_range(lo..hi), r.gen_range(lo..hi), r.gen_range(0.0..1.0))
            })
            .collect(),
    )
}

fn cell_of(p: &Point, origin: [f64; 3], size: [f64; 3]) -> [i64; 3] {
    let c = [p.x as f64, p.y as f64, p.z as f64];
    [
        ((c[0] - origin[0]) / size[0]).floor() as i64,
        ((c[1] - origin[1]) / size[1]).floor() as i64,
        ((c[2] - origin[2]) / size[2]).floor() as i64,
    ]
}

/// Groups points by cell with a linear scan over known cells (no hashing).
/// Returns (cell, member indices in input order), cells sorted.
pub fn oracle_group(points: &[Point], origin: [f64; 3], size: [f64; 3]) -> Vec<([i64; 3], Vec<usize>)> {
    let mut groups: Vec<([i64; 3], Vec<usize>)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let key = cell_of(p, origin, size);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    groups.sort_by_key(|(k, _)| *k);
    groups
}

pub fn oracle_crop(points: &[Point], range: &RangeSpec) -> Vec<Point> {
    points
        .iter()
        .copied()
        .filter(|p| {
            let c = [p.x as f64, p.y as f64, p.z as f64];
            c[0] >= range.min[0]
                && c[0] < range.max[0]
                && c[1] >= range.min[1]
                && c[1] < range.max[1]
                && c[2] >= range.min[2]
                && c[2] < range.max[2]
        })
        .collect()
}

// ----------------------------------------------------------------- datasets

pub fn frame_with(id: &str, w: u32, h: u32, anns: Vec<Annotation>) -> Frame {
    let mut f = Frame::new(id, w, h);
    f.annotations = anns;
    f
}

pub fn gt_aa(class_id: u32, b: BoxAA) -> Annotation {
    Annotation::ground_truth(class_id, Geometry::Aa(b))
}

pub fn det_aa(class_id: u32, b: BoxAA, score: f64) -> Annotation {
    Annotation::detection(class_id, Geometry::Aa(b), score)
}

pub fn catalog(n: usize) -> ClassCatalog {
    ClassCatalog::new((0..n).map(|i| format!("class {i}"))).unwrap()
}

/// Scene whose ground truths sit on a coarse lattice so that no detection
/// can overlap two of them at IoU ≥ 0.5.
pub fn separated_scene(r: &mut ChaCha8Rng, frames: usize, classes: usize) -> (Dataset, Dataset) {
    let mut gt_frames = Vec::new();
    let mut det_frames = Vec::new();
    for f in 0..frames {
        let mut gts = Vec::new();
        let mut dets = Vec::new();
        for cell in 0..r.gen_range(0..6) {
            let (cx, cy) = ((cell % 3) as f64 * 100.0, (cell / 3) as f64 * 100.0);
            let class = r.gen_range(0..classes) as u32;
            let gt = BoxAA::new(cx, cy, cx + 40.0, cy + 40.0).unwrap();
            gts.push(gt_aa(class, gt));
            for _ in 0..r.gen_range(0..3) {
                let dx = r.gen_range(-15.0..15.0);
                let dy = r.gen_range(-15.0..15.0);
                let b = BoxAA::new(cx + dx, cy + dy, cx + dx + 40.0, cy + dy + 40.0).unwrap();
                dets.push(det_aa(class, b, (r.gen_range(0..1000) as f64) / 1000.0));
            }
        }
        for _ in 0..r.gen_range(0..3) {
            let x = r.gen_range(350.0..600.0);
            let b = BoxAA::new(x, 400.0, x + 30.0, 430.0).unwrap();
            dets.push(det_aa(r.gen_range(0..classes) as u32, b, r.gen_range(0.0..1.0)));
        }
        gt_frames.push(frame_with(&format!("f{f:04}"), 640, 640, gts));
        det_frames.push(frame_with(&format!("f{f:04}"), 640, 640, dets));
    }
    (
        Dataset::new(catalog(classes), gt_frames).unwrap(),
        Dataset::new(catalog(classes), det_frames).unwrap(),
    )
}
