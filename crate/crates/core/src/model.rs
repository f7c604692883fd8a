//! Canonical domain types shared across the toolkit.
//!
//! Geometry is always stored in pixel (2D) or metre (3D) units. Normalized
//! coordinates only exist at format boundaries such as YOLO label files.

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the eight instrument classes of the endoscope dataset, in
/// annotation-protocol order. The index is the class id.
pub const ENDOSCOPE_CLASSES: [&str; 8] = [
    "crocodile grasper",
    "johan grasper",
    "hook diathermy",
    "maryland grasper",
    "clipper",
    "scissors",
    "bag holder",
    "trocar",
];

/// Lower-cases and collapses whitespace runs so that `"  Hook   Diathermy "`
/// and `"hook diathermy"` compare equal.
pub fn normalize_class_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// An ordered list of class names. The position of a name is its id, so
/// ids are contiguous from zero by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassCatalog {
    names: Vec<String>,
}

/// A resolved catalog entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassEntry<'a> {
    pub id: u32,
    pub name: &'a str,
}

/// Key accepted by [`ClassCatalog::resolve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassRef {
    Id(u32),
    Name(String),
}

impl From<u32> for ClassRef {
    fn from(id: u32) -> Self {
        ClassRef::Id(id)
    }
}

impl From<&str> for ClassRef {
    fn from(name: &str) -> Self {
        ClassRef::Name(name.to_owned())
    }
}

impl From<String> for ClassRef {
    fn from(name: String) -> Self {
        ClassRef::Name(name)
    }
}

impl From<ClassEntry<'_>> for ClassRef {
    fn from(entry: ClassEntry<'_>) -> Self {
        ClassRef::Id(entry.id)
    }
}

impl ClassCatalog {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for name in &names {
            let key = normalize_class_name(name);
            if key.is_empty() {
                return Err(Error::InvalidCatalog("empty class name".into()));
            }
            if !seen.insert(key) {
                return Err(Error::InvalidCatalog(format!("duplicate class name {name:?}")));
            }
        }
        Ok(Self { names })
    }

    /// The eight-class endoscope instrument catalog.
    pub fn endoscope() -> Self {
        Self::new(ENDOSCOPE_CLASSES).expect("static catalog is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = ClassEntry<'_>> {
        self.names.iter().enumerate().map(|(id, name)| ClassEntry {
            id: id as u32,
            name,
        })
    }

    pub fn contains(&self, id: u32) -> bool {
        (id as usize) < self.names.len()
    }

    /// Looks up a class id by name, ignoring case and surrounding or
    /// repeated whitespace.
    pub fn lookup(&self, name: &str) -> Result<u32> {
        let key = normalize_class_name(name);
        self.names
            .iter()
            .position(|n| normalize_class_name(n) == key)
            .map(|i| i as u32)
            .ok_or_else(|| Error::ClassNotFound(name.to_owned()))
    }

    pub fn name(&self, id: u32) -> Result<&str> {
        self.names
            .get(id as usize)
            .map(String::as_str)
            .ok_or_else(|| Error::ClassNotFound(id.to_string()))
    }

    pub fn resolve(&self, key: impl Into<ClassRef>) -> Result<ClassEntry<'_>> {
        let id = match key.into() {
            ClassRef::Id(id) => id,
            ClassRef::Name(name) => self.lookup(&name)?,
        };
        Ok(ClassEntry {
            id,
            name: self.name(id)?,
        })
    }

    /// Resolves a command-line style key: a name if one matches, otherwise
    /// a decimal id.
    pub fn resolve_str(&self, key: &str) -> Result<ClassEntry<'_>> {
        match self.lookup(key) {
            Ok(id) => self.resolve(id),
            Err(e) => match key.trim().parse::<u32>() {
                Ok(id) => self.resolve(id),
                Err(_) => Err(e),
            },
        }
    }
}

impl TryFrom<Vec<String>> for ClassCatalog {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<ClassCatalog> for Vec<String> {
    fn from(catalog: ClassCatalog) -> Self {
        catalog.names
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("{what} has non-finite coordinates")))
    }
}

/// Axis-aligned box in corner form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxAA {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoxAA {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        check_finite(&[x_min, y_min, x_max, y_max], "box")?;
        if x_min > x_max || y_min > y_max {
            return Err(Error::InvalidValue(format!(
                "box corners out of order: ({x_min}, {y_min}, {x_max}, {y_max})"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Builds a box from its top-left corner and size.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if w < 0.0 || h < 0.0 {
            return Err(Error::InvalidValue(format!("negative box size {w}x{h}")));
        }
        Self::new(x, y, x + w, y + h)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if w < 0.0 || h < 0.0 {
            return Err(Error::InvalidValue(format!("negative box size {w}x{h}")));
        }
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn clamp(&self, width: f64, height: f64) -> Self {
        Self {
            x_min: self.x_min.clamp(0.0, width),
            y_min: self.y_min.clamp(0.0, height),
            x_max: self.x_max.clamp(0.0, width),
            y_max: self.y_max.clamp(0.0, height),
        }
    }

    /// The rotated-box form of this box with zero angle.
    pub fn to_rot(&self) -> BoxRot {
        let (cx, cy) = self.center();
        BoxRot {
            cx,
            cy,
            w: self.width(),
            h: self.height(),
            theta: 0.0,
        }
    }
}

/// Wraps an angle into `[-π/2, π/2)`. A rectangle rotated by π is the same
/// rectangle, so this never changes the box.
pub fn wrap_half_turn(theta: f64) -> f64 {
    if (-FRAC_PI_2..FRAC_PI_2).contains(&theta) {
        return theta;
    }
    let t = (theta + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if t >= FRAC_PI_2 {
        t - PI
    } else {
        t
    }
}

/// Oriented box. `w` is measured along the direction `theta` (radians,
/// counter-clockwise from +x), `h` perpendicular to it. Angles are kept in
/// `[-π/2, π/2)`; [`BoxRot::canonical`] additionally enforces `w >= h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRot {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl BoxRot {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        check_finite(&[cx, cy, w, h, theta], "rotated box")?;
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidValue(format!("rotated box sides must be positive, got {w}x{h}")));
        }
        Ok(Self {
            cx,
            cy,
            w,
            h,
            theta: wrap_half_turn(theta),
        })
    }

    /// Long-edge form: `w >= h`, angle wrapped into `[-π/2, π/2)`.
    pub fn canonical(&self) -> Self {
        let (w, h, theta) = if self.w >= self.h {
            (self.w, self.h, self.theta)
        } else {
            (self.h, self.w, self.theta + FRAC_PI_2)
        };
        Self {
            w,
            h,
            theta: wrap_half_turn(theta),
            ..*self
        }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corner points in counter-clockwise order.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        rect_corners(self.cx, self.cy, self.w, self.h, self.theta)
    }
}

pub(crate) fn rect_corners(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> [[f64; 2]; 4] {
    let (s, c) = theta.sin_cos();
    let (ux, uy) = (c * w / 2.0, s * w / 2.0);
    let (vx, vy) = (-s * h / 2.0, c * h / 2.0);
    [
        [cx - ux - vx, cy - uy - vy],
        [cx + ux - vx, cy + uy - vy],
        [cx + ux + vx, cy + uy + vy],
        [cx - ux + vx, cy - uy + vy],
    ]
}

/// 3D box: centre, extents along the box's own axes, and yaw about +z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub yaw: f64,
}

impl Box3D {
    pub fn new(x: f64, y: f64, z: f64, dx: f64, dy: f64, dz: f64, yaw: f64) -> Result<Self> {
        check_finite(&[x, y, z, dx, dy, dz, yaw], "3D box")?;
        if dx <= 0.0 || dy <= 0.0 || dz <= 0.0 {
            return Err(Error::InvalidValue(format!(
                "3D box extents must be positive, got ({dx}, {dy}, {dz})"
            )));
        }
        Ok(Self {
            x,
            y,
            z,
            dx,
            dy,
            dz,
            yaw,
        })
    }

    pub fn volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// Bird's-eye-view footprint as a rotated box.
    pub fn footprint(&self) -> BoxRot {
        BoxRot {
            cx: self.x,
            cy: self.y,
            w: self.dx,
            h: self.dy,
            theta: self.yaw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Aa,
    Rot,
    #[serde(rename = "3d")]
    ThreeD,
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeometryKind::Aa => "aa",
            GeometryKind::Rot => "rot",
            GeometryKind::ThreeD => "3d",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Aa(BoxAA),
    Rot(BoxRot),
    #[serde(rename = "3d")]
    ThreeD(Box3D),
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Aa(_) => GeometryKind::Aa,
            Geometry::Rot(_) => GeometryKind::Rot,
            Geometry::ThreeD(_) => GeometryKind::ThreeD,
        }
    }

    pub fn as_aa(&self) -> Option<&BoxAA> {
        match self {
            Geometry::Aa(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_3d(&self) -> Option<&Box3D> {
        match self {
            Geometry::ThreeD(b) => Some(b),
            _ => None,
        }
    }
}

/// A labelled box. Ground truth has no score; detections do.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub class_id: u32,
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Annotation {
    pub fn ground_truth(class_id: u32, geometry: Geometry) -> Self {
        Self {
            class_id,
            geometry,
            score: None,
        }
    }

    pub fn detection(class_id: u32, geometry: Geometry, score: f64) -> Self {
        Self {
            class_id,
            geometry,
            score: Some(score),
        }
    }

    pub fn is_detection(&self) -> bool {
        self.score.is_some()
    }
}

/// One image (or point cloud) with its annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl Frame {
    pub fn new(id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            id: id.into(),
            width,
            height,
            source: String::new(),
            annotations: Vec::new(),
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    /// Clamps every axis-aligned box to the image rectangle.
    pub fn clamp_annotations(&mut self) {
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        for ann in &mut self.annotations {
            if let Geometry::Aa(b) = &mut ann.geometry {
                *b = b.clamp(w, h);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub catalog: ClassCatalog,
    pub frames: Vec<Frame>,
}

impl Dataset {
    pub fn new(catalog: ClassCatalog, frames: Vec<Frame>) -> Result<Self> {
        let dataset = Self { catalog, frames };
        dataset.validate()?;
        Ok(dataset)
    }

    /// Checks frame-id uniqueness, image dimensions and class ids.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for (i, frame) in self.frames.iter().enumerate() {
            if !ids.insert(frame.id.as_str()) {
                return Err(Error::record(i, format!("duplicate frame id {:?}", frame.id)));
            }
            if frame.width == 0 || frame.height == 0 {
                return Err(Error::record(i, format!("frame {:?} has zero size", frame.id)));
            }
            for ann in &frame.annotations {
                if !self.catalog.contains(ann.class_id) {
                    return Err(Error::record(
                        i,
                        format!("frame {:?}: class id {} not in catalog", frame.id, ann.class_id),
                    ));
                }
                if let Some(s) = ann.score {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(Error::record(i, format!("score {s} outside [0, 1]")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn annotation_count(&self) -> usize {
        self.frames.iter().map(|f| f.annotations.len()).sum()
    }

    pub fn frame(&self, id: &str) -> Option<&Frame> {
        self.frames.iter().find(|f| f.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endoscope_catalog_order() {
        let cat = ClassCatalog::endoscope();
        assert_eq!(cat.len(), 8);
        assert_eq!(cat.name(0).unwrap(), "crocodile grasper");
        assert_eq!(cat.lookup("trocar").unwrap(), 7);
        assert!(matches!(cat.lookup("forceps"), Err(Error::ClassNotFound(_))));
    }

    #[test]
    fn resolve_by_name_and_id() {
        let cat = ClassCatalog::endoscope();
        assert_eq!(cat.resolve("Clipper").unwrap().id, 4);
        assert_eq!(cat.resolve(4).unwrap().name, "clipper");
        assert_eq!(cat.resolve("  hook diathermy ").unwrap().id, 2);
        assert_eq!(cat.resolve("HOOK\t diathermy").unwrap().id, 2);
        assert!(cat.resolve(8).is_err());
        assert_eq!(cat.resolve_str("3").unwrap().name, "maryland grasper");
    }

    #[test]
    fn resolve_is_idempotent() {
        let cat = ClassCatalog::endoscope();
        for name in ENDOSCOPE_CLASSES {
            let once = cat.resolve(name).unwrap();
            assert_eq!(cat.resolve(once).unwrap(), once);
            assert_eq!(cat.resolve(once.name).unwrap(), once);
        }
    }

    #[test]
    fn catalog_rejects_bad_names() {
        assert!(ClassCatalog::new(["a", "A "]).is_err());
        assert!(ClassCatalog::new(["a", "  "]).is_err());
        assert!(ClassCatalog::new(Vec::<String>::new()).unwrap().is_empty());
    }

    #[test]
    fn catalog_serde_validates() {
        let cat: ClassCatalog = serde_json::from_str(r#"["x","y"]"#).unwrap();
        assert_eq!(cat.lookup("y").unwrap(), 1);
        assert!(serde_json::from_str::<ClassCatalog>(r#"["x","X"]"#).is_err());
    }

    #[test]
    fn box_invariants() {
        assert!(BoxAA::new(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(BoxAA::from_xywh(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(BoxRot::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(Box3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(BoxAA::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn angle_wrapping() {
        for t in [-10.0, -FRAC_PI_2, -1.0, 0.0, 1.0, FRAC_PI_2, PI, 7.5] {
            let w = wrap_half_turn(t);
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&w), "{t} -> {w}");
            let k = (t - w) / PI;
            assert!((k - k.round()).abs() < 1e-9);
        }
        assert_eq!(wrap_half_turn(FRAC_PI_2), -FRAC_PI_2);
    }

    #[test]
    fn canonical_is_long_edge() {
        let b = BoxRot::new(0.0, 0.0, 1.0, 3.0, 0.2).unwrap().canonical();
        assert_eq!((b.w, b.h), (3.0, 1.0));
        assert!((b.theta - (0.2 + FRAC_PI_2 - PI)).abs() < 1e-12);
    }

    #[test]
    fn dataset_validation() {
        let mut f = Frame::new("a", 10, 10);
        f.annotations.push(Annotation::ground_truth(
            9,
            Geometry::Aa(BoxAA::new(0.0, 0.0, 1.0, 1.0).unwrap()),
        ));
        assert!(Dataset::new(ClassCatalog::endoscope(), vec![f]).is_err());
        let dup = vec![Frame::new("a", 1, 1), Frame::new("a", 1, 1)];
        assert!(Dataset::new(ClassCatalog::endoscope(), dup).is_err());
    }

    #[test]
    fn geometry_serde_shape() {
        let ann = Annotation::detection(1, Geometry::Aa(BoxAA::new(0.0, 0.0, 1.0, 2.0).unwrap()), 0.5);
        let json = serde_json::to_value(ann).unwrap();
        assert_eq!(json["geometry"]["aa"]["y_max"], 2.0);
        let back: Annotation = serde_json::from_value(json).unwrap();
        assert_eq!(back, ann);
    }
}
