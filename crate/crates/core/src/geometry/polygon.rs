use serde::{Deserialize, Serialize};

/// Tolerance for classifying a vertex as on a clipping edge.
pub const CLIP_EPS: f64 = 1e-9;
/// Polygons with less area than this are treated as empty.
pub const MIN_AREA: f64 = 1e-12;

/// A convex polygon with counter-clockwise vertices, or the empty polygon.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    twice / 2.0
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a polygon from vertices given in either winding. The caller
    /// guarantees convexity; clockwise input is reversed.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Self {
        if vertices.len() < 3 {
            return Self::empty();
        }
        let area = signed_area(&vertices);
        if area.abs() < MIN_AREA {
            return Self::empty();
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// Sutherland–Hodgman clip of `self` against every edge of `clip`.
    pub fn intersection(&self, clip: &ConvexPolygon) -> ConvexPolygon {
        if self.is_empty() || clip.is_empty() {
            return Self::empty();
        }
        let mut output = self.vertices.clone();
        let n = clip.vertices.len();
        for i in 0..n {
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % n];
            let input = std::mem::take(&mut output);
            if input.is_empty() {
                break;
            }
            let m = input.len();
            for j in 0..m {
                let cur = input[j];
                let prev = input[(j + m - 1) % m];
                let d_cur = cross(a, b, cur);
                let d_prev = cross(a, b, prev);
                let cur_in = d_cur >= -CLIP_EPS;
                let prev_in = d_prev >= -CLIP_EPS;
                if cur_in {
                    if !prev_in {
                        output.push(edge_crossing(prev, cur, d_prev, d_cur));
                    }
                    output.push(cur);
                } else if prev_in {
                    output.push(edge_crossing(prev, cur, d_prev, d_cur));
                }
            }
        }
        ConvexPolygon::new(output)
    }

    pub fn intersection_area(&self, other: &ConvexPolygon) -> f64 {
        self.intersection(other).area()
    }
}

fn edge_crossing(p: [f64; 2], q: [f64; 2], dp: f64, dq: f64) -> [f64; 2] {
    let denom = dp - dq;
    if denom.abs() < f64::MIN_POSITIVE {
        return q;
    }
    let t = (dp / denom).clamp(0.0, 1.0);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]])
    }

    #[test]
    fn shoelace_and_winding() {
        let cw = ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 2.0], [3.0, 2.0], [3.0, 0.0]]);
        assert_eq!(cw.area(), 6.0);
        assert!(signed_area(cw.vertices()) > 0.0);
    }

    #[test]
    fn overlapping_squares() {
        let a = square(0.0, 0.0, 2.0);
        let b = square(1.0, 1.0, 2.0);
        assert!((a.intersection_area(&b) - 1.0).abs() < 1e-12);
        assert!((b.intersection_area(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_touching_and_contained() {
        let a = square(0.0, 0.0, 1.0);
        assert_eq!(a.intersection_area(&square(5.0, 5.0, 1.0)), 0.0);
        assert_eq!(a.intersection_area(&square(1.0, 0.0, 1.0)), 0.0);
        let inner = square(0.25, 0.25, 0.5);
        assert!((a.intersection_area(&inner) - 0.25).abs() < 1e-12);
        assert!((inner.intersection_area(&a) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_empty() {
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 1.0]]).is_empty());
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_empty());
        assert_eq!(ConvexPolygon::empty().intersection_area(&square(0.0, 0.0, 1.0)), 0.0);
    }
}
