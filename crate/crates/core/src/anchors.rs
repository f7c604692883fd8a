//! Auto-anchor generation: k-means over box width/height with the
//! wh-ratio distance, and best-possible-recall scoring.
//!
//! The distance between a box and an anchor is `1 - r` where `r` is the
//! smaller of the two per-dimension ratios `min(w_b/w_a, w_a/w_b)` and
//! `min(h_b/h_a, h_a/h_b)`. Centroids are cluster means. Because the mean
//! does not minimize this distance, an update that would raise the mean
//! distance is rejected and the run stops, which keeps the recorded
//! objective non-increasing.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LetterboxTransform;
use crate::model::Dataset;

pub type Wh = [f64; 2];

pub const ANCHOR_SET_SCHEMA: &str = "ortk.anchors/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    pub n_per_level: usize,
    pub levels: usize,
    pub img_size: u32,
    pub seed: u64,
    pub ratio_threshold: f64,
    pub max_iter: usize,
    /// Stop when the objective improves by less than this fraction.
    pub tolerance: f64,
    /// Boxes narrower or shorter than this many pixels after scaling are
    /// left out of clustering.
    pub min_size: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self {
            n_per_level: 3,
            levels: 3,
            img_size: 640,
            seed: 0,
            ratio_threshold: 4.0,
            max_iter: 300,
            tolerance: 1e-6,
            min_size: 2.0,
        }
    }
}

/// Width-height priors grouped by feature level, finest level first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub schema: String,
    pub levels: Vec<Vec<Wh>>,
    pub n_per_level: usize,
    pub img_size: u32,
    pub ratio_threshold: f64,
    pub bpr: f64,
}

impl AnchorSet {
    pub fn all(&self) -> Vec<Wh> {
        self.levels.iter().flatten().copied().collect()
    }

    /// Detector-config style block: one line per level with integer-rounded
    /// `w,h` pairs.
    pub fn to_config_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} anchors per level, img_size {}, bpr {:.4} (ratio threshold {})",
            self.n_per_level, self.img_size, self.bpr, self.ratio_threshold
        );
        out.push_str("anchors:\n");
        for (i, level) in self.levels.iter().enumerate() {
            let pairs: Vec<String> = level
                .iter()
                .map(|[w, h]| format!("{},{}", w.round() as i64, h.round() as i64))
                .collect();
            let stride = 8usize << i;
            let _ = writeln!(out, "  - [{}]  # P{}/{}", pairs.join(", "), i + 3, stride);
        }
        out
    }
}

/// Full result of an anchor run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorRun {
    pub anchors: AnchorSet,
    pub boxes_used: usize,
    pub boxes_excluded: usize,
    /// Mean box-to-centroid distance after each accepted iteration.
    pub objective_history: Vec<f64>,
}

/// `min` over dimensions of the symmetric size ratio; 1 for equal sizes.
pub fn ratio_metric(b: Wh, a: Wh) -> f64 {
    let rw = (b[0] / a[0]).min(a[0] / b[0]);
    let rh = (b[1] / a[1]).min(a[1] / b[1]);
    rw.min(rh)
}

pub fn wh_distance(b: Wh, a: Wh) -> f64 {
    1.0 - ratio_metric(b, a)
}

/// Box sizes rescaled so each frame's long side equals `img_size`.
/// Returns the kept sizes and the number of boxes dropped for being below
/// `min_size` on either side.
pub fn collect_wh(dataset: &Dataset, img_size: u32, min_size: f64) -> Result<(Vec<Wh>, usize)> {
    let mut kept = Vec::new();
    let mut excluded = 0;
    for frame in &dataset.frames {
        let t = LetterboxTransform::new(frame.width, frame.height, (img_size, img_size))?;
        for ann in &frame.annotations {
            let Some(b) = ann.geometry.as_aa() else {
                continue;
            };
            let wh = [b.width() * t.scale, b.height() * t.scale];
            if wh[0] < min_size || wh[1] < min_size {
                excluded += 1;
            } else {
                kept.push(wh);
            }
        }
    }
    Ok((kept, excluded))
}

fn nearest(p: Wh, centroids: &[Wh]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centroids.iter().enumerate() {
        let d = wh_distance(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp_seeds(points: &[Wh], k: usize, rng: &mut ChaCha8Rng) -> Vec<Wh> {
    let mut seeds = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|&p| wh_distance(p, seeds[0]).powi(2)).collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick];
        seeds.push(c);
        for (slot, &p) in d2.iter_mut().zip(points) {
            *slot = slot.min(wh_distance(p, c).powi(2));
        }
    }
    seeds
}

fn assign(points: &[Wh], centroids: &[Wh]) -> Vec<usize> {
    points.iter().map(|&p| nearest(p, centroids).0).collect()
}

/// Cluster means; empty clusters keep their previous centroid.
fn means(points: &[Wh], labels: &[usize], previous: &[Wh]) -> Vec<Wh> {
    let mut sums = vec![[0.0, 0.0, 0.0]; previous.len()];
    for (&p, &l) in points.iter().zip(labels) {
        sums[l][0] += p[0];
        sums[l][1] += p[1];
        sums[l][2] += 1.0;
    }
    sums.iter()
        .zip(previous)
        .map(|(s, &prev)| if s[2] > 0.0 { [s[0] / s[2], s[1] / s[2]] } else { prev })
        .collect()
}

fn objective(points: &[Wh], labels: &[usize], centroids: &[Wh]) -> f64 {
    let total: f64 = points
        .iter()
        .zip(labels)
        .map(|(&p, &l)| wh_distance(p, centroids[l]))
        .sum();
    total / points.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Wh>,
    pub labels: Vec<usize>,
    pub history: Vec<f64>,
}

/// Seeded k-means (k-means++ initialization) under [`wh_distance`].
pub fn kmeans_wh(points: &[Wh], k: usize, seed: u64, max_iter: usize, tolerance: f64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::InvalidValue("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidValue(format!("{} boxes are too few for {k} anchors", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = kmeans_pp_seeds(points, k, &mut rng);
    let mut labels = assign(points, &seeds);
    let mut centroids = means(points, &labels, &seeds);
    let mut current = objective(points, &labels, &centroids);
    let mut history = vec![current];
    for _ in 0..max_iter {
        let next_labels = assign(points, &centroids);
        if next_labels == labels {
            break;
        }
        let next_centroids = means(points, &next_labels, &centroids);
        let next = objective(points, &next_labels, &next_centroids);
        if next > current {
            break;
        }
        labels = next_labels;
        centroids = next_centroids;
        history.push(next);
        let improved = current - next;
        current = next;
        if current == 0.0 || improved <= tolerance * (current + improved) {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        labels,
        history,
    })
}

/// Fraction of boxes whose best anchor is within `ratio_threshold` in both
/// width and height (strictly below the threshold).
pub fn bpr_wh(boxes: &[Wh], anchors: &[Wh], ratio_threshold: f64) -> Result<f64> {
    if boxes.is_empty() {
        return Err(Error::InvalidValue("best possible recall needs at least one box".into()));
    }
    if anchors.is_empty() {
        return Ok(0.0);
    }
    let covered = boxes
        .iter()
        .filter(|&&b| {
            anchors
                .iter()
                .map(|&a| 1.0 / ratio_metric(b, a))
                .fold(f64::INFINITY, f64::min)
                < ratio_threshold
        })
        .count();
    Ok(covered as f64 / boxes.len() as f64)
}

/// Best possible recall of `anchors` on a dataset, using the same box
/// scaling and size filter as anchor generation.
pub fn best_possible_recall(anchors: &AnchorSet, dataset: &Dataset, ratio_threshold: f64) -> Result<f64> {
    let (boxes, _) = collect_wh(dataset, anchors.img_size, AnchorConfig::default().min_size)?;
    bpr_wh(&boxes, &anchors.all(), ratio_threshold)
}

/// Groups centroids into levels by ascending area.
pub fn partition_levels(mut centroids: Vec<Wh>, levels: usize) -> Vec<Vec<Wh>> {
    centroids.sort_by(|a, b| (a[0] * a[1]).total_cmp(&(b[0] * b[1])).then(a[0].total_cmp(&b[0])));
    let per = centroids.len() / levels.max(1);
    centroids.chunks(per.max(1)).map(<[Wh]>::to_vec).collect()
}

pub fn anchors_from_wh(boxes: &[Wh], config: &AnchorConfig) -> Result<(AnchorSet, Vec<f64>)> {
    if config.n_per_level == 0 || config.levels == 0 {
        return Err(Error::InvalidValue("anchor counts must be positive".into()));
    }
    let k = config.n_per_level * config.levels;
    if boxes.len() < k {
        return Err(Error::InvalidValue(format!(
            "{} usable boxes are too few for {k} anchors",
            boxes.len()
        )));
    }
    let km = kmeans_wh(boxes, k, config.seed, config.max_iter, config.tolerance)?;
    let bpr = bpr_wh(boxes, &km.centroids, config.ratio_threshold)?;
    Ok((
        AnchorSet {
            schema: ANCHOR_SET_SCHEMA.to_owned(),
            levels: partition_levels(km.centroids, config.levels),
            n_per_level: config.n_per_level,
            img_size: config.img_size,
            ratio_threshold: config.ratio_threshold,
            bpr,
        },
        km.history,
    ))
}

pub fn generate_anchors(dataset: &Dataset, config: &AnchorConfig) -> Result<AnchorRun> {
    let (boxes, excluded) = collect_wh(dataset, config.img_size, config.min_size)?;
    let (anchors, objective_history) = anchors_from_wh(&boxes, config)?;
    Ok(AnchorRun {
        anchors,
        boxes_used: boxes.len(),
        boxes_excluded: excluded,
        objective_history,
    })
}
