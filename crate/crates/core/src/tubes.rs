//! Action tubes from per-frame detections, and the local tube graphs built
//! over fixed temporal windows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::iou_aa;
use crate::model::{BoxAA, Frame};

pub const TUBES_SCHEMA: &str = "ortk.tubes/v1";
pub const GRAPHS_SCHEMA: &str = "ortk.graphs/v1";

/// Default local-graph window lengths, in frames.
pub const DEFAULT_WINDOWS: [usize; 4] = [12, 18, 24, 30];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeEntry {
    pub frame_index: usize,
    pub bbox: BoxAA,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub tube_id: usize,
    pub class_id: u32,
    pub entries: Vec<TubeEntry>,
}

impl Tube {
    pub fn first_frame(&self) -> usize {
        self.entries.first().map_or(0, |e| e.frame_index)
    }

    pub fn last_frame(&self) -> usize {
        self.entries.last().map_or(0, |e| e.frame_index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn intersects(&self, window: &Window) -> bool {
        self.entries.iter().any(|e| window.contains(e.frame_index))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Association {
    #[default]
    Greedy,
    /// Maximum-total-IoU assignment per frame and class.
    Hungarian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub iou_threshold: f64,
    /// Largest number of consecutive frames a tube may go undetected and
    /// still be extended.
    pub max_gap: usize,
    pub association: Association,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.3,
            max_gap: 2,
            association: Association::Greedy,
        }
    }
}

/// Links detections across `frames` (in sequence order) into tubes.
///
/// Only axis-aligned detections are linked; other geometries are ignored.
/// Tubes are numbered in creation order.
pub fn link_tubes(frames: &[Frame], config: &LinkConfig) -> Result<Vec<Tube>> {
    if !(0.0..=1.0).contains(&config.iou_threshold) {
        return Err(Error::InvalidValue(format!("IoU threshold {} outside [0, 1]", config.iou_threshold)));
    }
    let mut tubes: Vec<Tube> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for (t, frame) in frames.iter().enumerate() {
        open.retain(|&i| t - tubes[i].last_frame() - 1 <= config.max_gap);
        let dets: Vec<(u32, BoxAA, f64)> = frame
            .annotations
            .iter()
            .filter_map(|a| a.geometry.as_aa().map(|b| (a.class_id, *b, a.score.unwrap_or(1.0))))
            .collect();
        let mut claimed = vec![false; dets.len()];
        let mut classes: Vec<u32> = dets.iter().map(|d| d.0).collect();
        classes.sort_unstable();
        classes.dedup();
        for class in classes {
            let tube_idx: Vec<usize> = open.iter().copied().filter(|&i| tubes[i].class_id == class).collect();
            let det_idx: Vec<usize> = (0..dets.len()).filter(|&d| dets[d].0 == class).collect();
            let ious: Vec<Vec<f64>> = tube_idx
                .iter()
                .map(|&ti| {
                    let last = tubes[ti].entries.last().expect("tubes are never empty").bbox;
                    det_idx.iter().map(|&d| iou_aa(&last, &dets[d].1)).collect()
                })
                .collect();
            let pairs = match config.association {
                Association::Greedy => greedy_pairs(&ious, config.iou_threshold),
                Association::Hungarian => hungarian_pairs(&ious, config.iou_threshold),
            };
            for (ti, di) in pairs {
                let d = det_idx[di];
                claimed[d] = true;
                tubes[tube_idx[ti]].entries.push(TubeEntry {
                    frame_index: t,
                    bbox: dets[d].1,
                    score: dets[d].2,
                });
            }
        }
        for (d, det) in dets.iter().enumerate() {
            if !claimed[d] {
                open.push(tubes.len());
                tubes.push(Tube {
                    tube_id: tubes.len(),
                    class_id: det.0,
                    entries: vec![TubeEntry {
                        frame_index: t,
                        bbox: det.1,
                        score: det.2,
                    }],
                });
            }
        }
    }
    Ok(tubes)
}

/// Tubes in id order each take their best unclaimed detection.
fn greedy_pairs(ious: &[Vec<f64>], threshold: f64) -> Vec<(usize, usize)> {
    let n_det = ious.first().map_or(0, Vec::len);
    let mut taken = vec![false; n_det];
    let mut pairs = Vec::new();
    for (ti, row) in ious.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (d, &v) in row.iter().enumerate() {
            if !taken[d] && v >= threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((d, v));
            }
        }
        if let Some((d, _)) = best {
            taken[d] = true;
            pairs.push((ti, d));
        }
    }
    pairs
}

/// Maximum-weight assignment on IoU, keeping only pairs at or above
/// `threshold`. Pairs below the threshold get zero weight so they never
/// displace a valid match.
fn hungarian_pairs(ious: &[Vec<f64>], threshold: f64) -> Vec<(usize, usize)> {
    let rows = ious.len();
    let cols = ious.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let n = rows.max(cols);
    let weight = |r: usize, c: usize| {
        if r < rows && c < cols && ious[r][c] >= threshold {
            ious[r][c]
        } else {
            0.0
        }
    };
    let assignment = min_cost_assignment(n, |r, c| -weight(r, c));
    assignment
        .into_iter()
        .enumerate()
        .filter(|&(r, c)| r < rows && c < cols && ious[r][c] >= threshold)
        .collect()
}

/// Square assignment problem (Kuhn–Munkres with potentials, O(n³)).
/// Returns the column assigned to each row.
fn min_cost_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Half-open frame interval `[start, start + length)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub length: usize,
}

impl Window {
    pub fn contains(&self, frame: usize) -> bool {
        frame >= self.start && frame < self.start + self.length
    }
}

/// Windows of `length` frames every `stride` frames covering
/// `0..total_frames`; the last window may run past the end.
pub fn windows(total_frames: usize, length: usize, stride: usize) -> Result<Vec<Window>> {
    if length == 0 || stride == 0 {
        return Err(Error::InvalidValue("window length and stride must be positive".into()));
    }
    Ok((0..total_frames).step_by(stride).map(|start| Window { start, length }).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Every tube linked to every other tube.
    FullyConnected,
    /// Star: every tube linked to a scene hub only.
    Scene,
    /// Star plus links between tubes of the same class.
    SceneSameLabel,
}

impl Topology {
    pub const ALL: [Topology; 3] = [Topology::FullyConnected, Topology::Scene, Topology::SceneSameLabel];

    pub fn has_scene(self) -> bool {
        !matches!(self, Topology::FullyConnected)
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fully_connected" => Ok(Topology::FullyConnected),
            "scene" => Ok(Topology::Scene),
            "scene_same_label" => Ok(Topology::SceneSameLabel),
            other => Err(Error::InvalidValue(format!(
                "unknown topology {other:?} (expected fully_connected, scene or scene_same_label)"
            ))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::FullyConnected => "fully_connected",
            Topology::Scene => "scene",
            Topology::SceneSameLabel => "scene_same_label",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphNode {
    Tube {
        tube_id: usize,
        class_id: u32,
        /// First and last frame of the tube inside the window.
        first_frame: usize,
        last_frame: usize,
    },
    /// Abstract hub without geometry.
    Scene,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalGraph {
    pub window: Window,
    pub topology: Topology,
    /// Tube nodes sorted by tube id, then the scene node if any.
    pub nodes: Vec<GraphNode>,
    /// Undirected edges as `(i, j)` node indices with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl LocalGraph {
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.nodes.len();
        let mut m = vec![vec![0u8; n]; n];
        for &(i, j) in &self.edges {
            m[i][j] = 1;
            m[j][i] = 1;
        }
        m
    }

    pub fn tube_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, GraphNode::Tube { .. })).count()
    }
}

pub fn build_local_graph(tubes: &[Tube], window: Window, topology: Topology) -> Result<LocalGraph> {
    if window.length == 0 {
        return Err(Error::InvalidValue("window length must be positive".into()));
    }
    let mut members: Vec<&Tube> = tubes.iter().filter(|t| t.intersects(&window)).collect();
    members.sort_by_key(|t| t.tube_id);
    let mut nodes: Vec<GraphNode> = members
        .iter()
        .map(|t| {
            let inside: Vec<usize> = t
                .entries
                .iter()
                .map(|e| e.frame_index)
                .filter(|&f| window.contains(f))
                .collect();
            GraphNode::Tube {
                tube_id: t.tube_id,
                class_id: t.class_id,
                first_frame: inside[0],
                last_frame: inside[inside.len() - 1],
            }
        })
        .collect();
    let n_tubes = members.len();
    let mut edges = Vec::new();
    for i in 0..n_tubes {
        for j in i + 1..n_tubes {
            let link = match topology {
                Topology::FullyConnected => true,
                Topology::Scene => false,
                Topology::SceneSameLabel => members[i].class_id == members[j].class_id,
            };
            if link {
                edges.push((i, j));
            }
        }
    }
    if topology.has_scene() {
        let scene = nodes.len();
        nodes.push(GraphNode::Scene);
        edges.extend((0..n_tubes).map(|i| (i, scene)));
    }
    edges.sort_unstable();
    Ok(LocalGraph {
        window,
        topology,
        nodes,
        edges,
    })
}

/// Tubes of one video, serialized for downstream model code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeDocument {
    pub schema: String,
    pub video_id: String,
    pub frame_count: usize,
    pub frame_ids: Vec<String>,
    pub tubes: Vec<Tube>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub window: Window,
    pub topology: Topology,
    pub nodes: Vec<GraphNode>,
    pub adjacency: Vec<Vec<u8>>,
}

/// Local graphs of one video keyed by window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema: String,
    pub video_id: String,
    pub graphs: Vec<GraphEntry>,
}

impl From<&LocalGraph> for GraphEntry {
    fn from(g: &LocalGraph) -> Self {
        Self {
            window: g.window,
            topology: g.topology,
            nodes: g.nodes.clone(),
            adjacency: g.adjacency_matrix(),
        }
    }
}
