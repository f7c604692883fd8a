//! Headerless KITTI-style binary clouds: four little-endian f32 values
//! (x, y, z, intensity) per point, 16 bytes per record.

use crate::error::{Error, Result};
use crate::pointcloud::{Point, PointCloud};

pub const RECORD_BYTES: usize = 16;

pub fn parse_bin(bytes: &[u8]) -> Result<Vec<Point>> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        return Err(Error::Truncated {
            expected: bytes.len().div_ceil(RECORD_BYTES) * RECORD_BYTES,
            actual: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(RECORD_BYTES)
        .map(|rec| {
            let f = |k: usize| f32::from_le_bytes([rec[k], rec[k + 1], rec[k + 2], rec[k + 3]]);
            Point {
                x: f(0),
                y: f(4),
                z: f(8),
                intensity: f(12),
            }
        })
        .collect())
}

pub fn write_bin(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.points.len() * RECORD_BYTES);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
