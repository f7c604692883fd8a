use crate::model::{Box3D, BoxAA, BoxRot, Geometry};

use super::polygon::{ConvexPolygon, MIN_AREA};

fn ratio(inter: f64, union: f64) -> f64 {
    if union <= 0.0 || inter <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn intersection_aa(a: &BoxAA, b: &BoxAA) -> f64 {
    let w = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let h = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h
    }
}

/// Intersection over union of two axis-aligned boxes. Zero-area boxes never
/// overlap anything.
pub fn iou_aa(a: &BoxAA, b: &BoxAA) -> f64 {
    let inter = intersection_aa(a, b);
    ratio(inter, a.area() + b.area() - inter)
}

pub fn rot_polygon(b: &BoxRot) -> ConvexPolygon {
    ConvexPolygon::new(b.corners().to_vec())
}

pub fn intersection_rot(a: &BoxRot, b: &BoxRot) -> f64 {
    let inter = rot_polygon(a).intersection_area(&rot_polygon(b));
    if inter < MIN_AREA {
        0.0
    } else {
        inter
    }
}

/// Intersection over union of two oriented boxes via convex clipping.
pub fn iou_rot(a: &BoxRot, b: &BoxRot) -> f64 {
    let inter = intersection_rot(a, b);
    ratio(inter, a.area() + b.area() - inter)
}

/// Volumetric IoU: rotated footprint overlap times vertical overlap.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let z_lo = (a.z - a.dz / 2.0).max(b.z - b.dz / 2.0);
    let z_hi = (a.z + a.dz / 2.0).min(b.z + b.dz / 2.0);
    let height = z_hi - z_lo;
    if height <= 0.0 {
        return 0.0;
    }
    let inter = intersection_rot(&a.footprint(), &b.footprint()) * height;
    ratio(inter, a.volume() + b.volume() - inter)
}

/// Bird's-eye-view IoU of the 3D footprints.
pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    iou_rot(&a.footprint(), &b.footprint())
}

/// IoU between two geometries of compatible kinds. Axis-aligned and
/// rotated boxes mix through the rotated kernel; 3D boxes only match 3D
/// boxes, and any other pairing scores zero.
pub fn iou(a: &Geometry, b: &Geometry) -> f64 {
    match (a, b) {
        (Geometry::Aa(a), Geometry::Aa(b)) => iou_aa(a, b),
        (Geometry::Rot(a), Geometry::Rot(b)) => iou_rot(a, b),
        (Geometry::Aa(a), Geometry::Rot(b)) => iou_rot(&a.to_rot(), b),
        (Geometry::Rot(a), Geometry::Aa(b)) => iou_rot(a, &b.to_rot()),
        (Geometry::ThreeD(a), Geometry::ThreeD(b)) => iou_3d(a, b),
        _ => 0.0,
    }
}
