use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BoxAA;

/// Default training resolution.
pub const DEFAULT_TARGET: (u32, u32) = (640, 640);

/// Aspect-preserving resize followed by symmetric padding to `target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterboxTransform {
    pub scale: f64,
    pub pad_x: f64,
    pub pad_y: f64,
    pub target: (u32, u32),
}

impl LetterboxTransform {
    pub fn new(src_w: u32, src_h: u32, target: (u32, u32)) -> Result<Self> {
        if src_w == 0 || src_h == 0 || target.0 == 0 || target.1 == 0 {
            return Err(Error::InvalidValue(format!(
                "letterbox needs positive sizes, got {src_w}x{src_h} -> {}x{}",
                target.0, target.1
            )));
        }
        let (sw, sh) = (f64::from(src_w), f64::from(src_h));
        let (tw, th) = (f64::from(target.0), f64::from(target.1));
        let scale = (tw / sw).min(th / sh);
        Ok(Self {
            scale,
            pad_x: (tw - sw * scale) / 2.0,
            pad_y: (th - sh * scale) / 2.0,
            target,
        })
    }

    /// Size of the resized image before padding.
    pub fn scaled_size(&self) -> (f64, f64) {
        (
            f64::from(self.target.0) - 2.0 * self.pad_x,
            f64::from(self.target.1) - 2.0 * self.pad_y,
        )
    }

    pub fn forward_point(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale + self.pad_x, y * self.scale + self.pad_y)
    }

    pub fn inverse_point(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale)
    }

    pub fn forward_box(&self, b: &BoxAA) -> BoxAA {
        let (x0, y0) = self.forward_point(b.x_min, b.y_min);
        let (x1, y1) = self.forward_point(b.x_max, b.y_max);
        BoxAA {
            x_min: x0,
            y_min: y0,
            x_max: x1,
            y_max: y1,
        }
    }

    pub fn inverse_box(&self, b: &BoxAA) -> BoxAA {
        let (x0, y0) = self.inverse_point(b.x_min, b.y_min);
        let (x1, y1) = self.inverse_point(b.x_max, b.y_max);
        BoxAA {
            x_min: x0,
            y_min: y0,
            x_max: x1,
            y_max: y1,
        }
    }
}

/// Letterbox transform onto the default 640×640 canvas.
pub fn letterbox(src_w: u32, src_h: u32) -> Result<LetterboxTransform> {
    LetterboxTransform::new(src_w, src_h, DEFAULT_TARGET)
}
