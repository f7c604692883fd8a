//! PCD v0.7 reader/writer restricted to float32 `x y z [intensity]` fields.

use std::io::Write;

use crate::error::{Error, Result};
use crate::pointcloud::{Point, PointCloud};

use super::Encoding;

#[derive(Debug)]
struct Header {
    fields: Vec<String>,
    points: usize,
    encoding: Encoding,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut fields: Option<Vec<String>> = None;
    let mut sizes: Option<Vec<String>> = None;
    let mut types: Option<Vec<String>> = None;
    let mut counts: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut points: Option<usize> = None;
    let parse_usize = |key: &str, v: Option<&&str>| -> Result<usize> {
        v.and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("bad PCD {key} value")))
    };
    let encoding = loop {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Malformed("PCD header has no DATA line".into()))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::Malformed("PCD header is not valid UTF-8".into()))?
            .trim();
        offset += end + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let owned = || tokens[1..].iter().map(|s| (*s).to_owned()).collect::<Vec<_>>();
        match tokens[0] {
            "VERSION" | "VIEWPOINT" => {}
            "FIELDS" => fields = Some(owned()),
            "SIZE" => sizes = Some(owned()),
            "TYPE" => types = Some(owned()),
            "COUNT" => counts = Some(owned()),
            "WIDTH" => width = Some(parse_usize("WIDTH", tokens.get(1))?),
            "HEIGHT" => height = Some(parse_usize("HEIGHT", tokens.get(1))?),
            "POINTS" => points = Some(parse_usize("POINTS", tokens.get(1))?),
            "DATA" => {
                break match tokens.get(1).copied() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary") => Encoding::Binary,
                    Some(other) => return Err(Error::UnsupportedLayout(format!("PCD DATA {other}"))),
                    None => return Err(Error::Malformed("PCD DATA line without encoding".into())),
                }
            }
            other => return Err(Error::Malformed(format!("unknown PCD header key {other:?}"))),
        }
    };

    let fields = fields.ok_or_else(|| Error::Malformed("PCD FIELDS missing".into()))?;
    let n = fields.len();
    let check = |name: &str, list: Option<Vec<String>>, want: &str, required: bool| -> Result<()> {
        match list {
            Some(list) if list.len() != n => Err(Error::Malformed(format!("PCD {name} has {} entries for {n} fields", list.len()))),
            Some(list) => match list.iter().position(|v| v != want) {
                Some(i) => Err(Error::UnsupportedLayout(format!(
                    "field {} has {name} {}; only float32 scalars are supported",
                    fields[i], list[i]
                ))),
                None => Ok(()),
            },
            None if required => Err(Error::Malformed(format!("PCD {name} missing"))),
            None => Ok(()),
        }
    };
    check("SIZE", sizes, "4", true)?;
    check("TYPE", types, "F", true)?;
    check("COUNT", counts, "1", false)?;
    for f in &fields {
        if !matches!(f.as_str(), "x" | "y" | "z" | "intensity") {
            return Err(Error::UnsupportedLayout(format!("PCD field {f:?}")));
        }
    }
    for axis in ["x", "y", "z"] {
        if !fields.iter().any(|f| f == axis) {
            return Err(Error::UnsupportedLayout(format!("PCD lacks field {axis}")));
        }
    }
    let organized = match (width, height) {
        (Some(w), Some(h)) => Some(w * h),
        (Some(w), None) => Some(w),
        _ => None,
    };
    let points = match (points, organized) {
        (Some(p), Some(o)) if p != o => {
            return Err(Error::Malformed(format!("PCD POINTS {p} disagrees with WIDTH*HEIGHT {o}")))
        }
        (Some(p), _) | (None, Some(p)) => p,
        (None, None) => return Err(Error::Malformed("PCD POINTS missing".into())),
    };
    Ok(Header {
        fields,
        points,
        encoding,
        body_offset: offset,
    })
}

pub fn parse_pcd(bytes: &[u8]) -> Result<Vec<Point>> {
    let header = parse_header(bytes)?;
    let idx = |name: &str| header.fields.iter().position(|f| f == name);
    let (x, y, z) = (idx("x").unwrap(), idx("y").unwrap(), idx("z").unwrap());
    let intensity = idx("intensity");
    let n = header.fields.len();
    let body = &bytes[header.body_offset..];
    let build = |vals: &[f32]| Point {
        x: vals[x],
        y: vals[y],
        z: vals[z],
        intensity: intensity.map(|k| vals[k]).unwrap_or(0.0),
    };

    match header.encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::Malformed("ascii PCD body is not UTF-8".into()))?;
            let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
            if lines.len() != header.points {
                return Err(Error::CountMismatch {
                    declared: header.points,
                    actual: lines.len(),
                });
            }
            let mut vals = vec![0f32; n];
            lines
                .iter()
                .enumerate()
                .map(|(i, line)| {
                    let tokens: Vec<&str> = line.split_whitespace().collect();
                    if tokens.len() != n {
                        return Err(Error::record(i, format!("expected {n} values, found {}", tokens.len())));
                    }
                    for (slot, tok) in vals.iter_mut().zip(&tokens) {
                        *slot = tok
                            .parse()
                            .map_err(|_| Error::record(i, format!("bad number {tok:?}")))?;
                    }
                    Ok(build(&vals))
                })
                .collect()
        }
        Encoding::Binary => {
            let stride = 4 * n;
            let expected = stride * header.points;
            if body.len() < expected {
                return Err(Error::Truncated {
                    expected,
                    actual: body.len(),
                });
            }
            if body.len() > expected {
                return Err(Error::CountMismatch {
                    declared: header.points,
                    actual: body.len() / stride,
                });
            }
            let mut vals = vec![0f32; n];
            Ok(body
                .chunks_exact(stride)
                .map(|rec| {
                    for (slot, b) in vals.iter_mut().zip(rec.chunks_exact(4)) {
                        *slot = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
                    }
                    build(&vals)
                })
                .collect())
        }
    }
}

pub fn write_pcd(cloud: &PointCloud, encoding: Encoding) -> Vec<u8> {
    let n = cloud.points.len();
    let data = match encoding {
        Encoding::Ascii => "ascii",
        Encoding::Binary => "binary",
    };
    let mut out = Vec::new();
    write!(
        out,
        "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z intensity\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\nWIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA {data}\n"
    )
    .expect("writing to Vec cannot fail");
    for p in &cloud.points {
        match encoding {
            Encoding::Ascii => {
                writeln!(out, "{} {} {} {}", p.x, p.y, p.z, p.intensity).expect("writing to Vec cannot fail")
            }
            Encoding::Binary => {
                for v in [p.x, p.y, p.z, p.intensity] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}
