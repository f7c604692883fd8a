//! PLY reader/writer for vertex clouds (ascii and binary little-endian).

use std::io::Write;

use crate::error::{Error, Result};
use crate::pointcloud::{Point, PointCloud};

use super::Encoding;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f32 {
        match self {
            Scalar::I8 => f32::from(b[0] as i8),
            Scalar::U8 => f32::from(b[0]),
            Scalar::I16 => f32::from(i16::from_le_bytes([b[0], b[1]])),
            Scalar::U16 => f32::from(u16::from_le_bytes([b[0], b[1]])),
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f32,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f32,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")) as f32,
        }
    }
}

#[derive(Debug)]
struct Property {
    name: String,
    scalar: Option<Scalar>,
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

impl Element {
    fn stride(&self) -> Option<usize> {
        self.properties.iter().map(|p| p.scalar.map(Scalar::size)).sum()
    }
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Malformed("PLY header is not terminated by end_header".into()))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::Malformed("PLY header is not valid UTF-8".into()))?
            .trim_end_matches('\r')
            .trim();
        offset += end + 1;
        if line == "end_header" {
            break;
        }
        lines.push(line.to_owned());
    }
    if lines.first().map(String::as_str) != Some("ply") {
        return Err(Error::Malformed("missing ply magic".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in &lines[1..] {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::Binary,
                    other => return Err(Error::UnsupportedLayout(format!("PLY format {other}"))),
                });
            }
            ["element", name, count] => elements.push(Element {
                name: (*name).to_owned(),
                count: count
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Malformed("property before element".into()))?;
                el.properties.push(Property {
                    name: (*name).to_owned(),
                    scalar: None,
                });
            }
            ["property", ty, name] => {
                let scalar = Scalar::parse(ty)
                    .ok_or_else(|| Error::UnsupportedLayout(format!("PLY property type {ty}")))?;
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Malformed("property before element".into()))?;
                el.properties.push(Property {
                    name: (*name).to_owned(),
                    scalar: Some(scalar),
                });
            }
            _ => return Err(Error::Malformed(format!("unrecognized PLY header line {line:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::Malformed("PLY format line missing".into()))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
    })
}

pub fn parse_ply(bytes: &[u8]) -> Result<Vec<Point>> {
    let header = parse_header(bytes)?;
    let vi = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::UnsupportedLayout("PLY has no vertex element".into()))?;
    let vertex = &header.elements[vi];
    if vertex.properties.iter().any(|p| p.scalar.is_none()) {
        return Err(Error::UnsupportedLayout("list property on vertex element".into()));
    }
    let find = |name: &str| vertex.properties.iter().position(|p| p.name == name);
    let (x, y, z) = match (find("x"), find("y"), find("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::UnsupportedLayout("vertex element lacks x/y/z".into())),
    };
    let intensity = find("intensity");
    let is_last = vi + 1 == header.elements.len();
    let body = &bytes[header.body_offset..];

    match header.encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::Malformed("ascii PLY body is not UTF-8".into()))?;
            let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
            for el in &header.elements[..vi] {
                for _ in 0..el.count {
                    lines.next();
                }
            }
            let mut points = Vec::with_capacity(vertex.count);
            for i in 0..vertex.count {
                let line = lines.next().ok_or(Error::CountMismatch {
                    declared: vertex.count,
                    actual: i,
                })?;
                let values: Vec<&str> = line.split_whitespace().collect();
                if values.len() != vertex.properties.len() {
                    return Err(Error::record(
                        i,
                        format!("expected {} values, found {}", vertex.properties.len(), values.len()),
                    ));
                }
                let get = |k: usize| -> Result<f32> {
                    values[k]
                        .parse::<f32>()
                        .map_err(|_| Error::record(i, format!("bad number {:?}", values[k])))
                };
                points.push(Point {
                    x: get(x)?,
                    y: get(y)?,
                    z: get(z)?,
                    intensity: intensity.map(get).transpose()?.unwrap_or(0.0),
                });
            }
            if is_last {
                let extra = lines.count();
                if extra > 0 {
                    return Err(Error::CountMismatch {
                        declared: vertex.count,
                        actual: vertex.count + extra,
                    });
                }
            }
            Ok(points)
        }
        Encoding::Binary => {
            let mut offset = 0usize;
            for el in &header.elements[..vi] {
                let stride = el.stride().ok_or_else(|| {
                    Error::UnsupportedLayout(format!("list property in element {} before vertex", el.name))
                })?;
                offset += stride * el.count;
            }
            let stride = vertex.stride().expect("checked above");
            let mut offsets = Vec::with_capacity(vertex.properties.len());
            let mut acc = 0;
            for p in &vertex.properties {
                offsets.push(acc);
                acc += p.scalar.expect("checked above").size();
            }
            let expected = offset + stride * vertex.count;
            if body.len() < expected {
                return Err(Error::Truncated {
                    expected,
                    actual: body.len(),
                });
            }
            if is_last && body.len() > expected {
                return Err(Error::CountMismatch {
                    declared: vertex.count,
                    actual: (body.len() - offset) / stride,
                });
            }
            let read = |rec: &[u8], k: usize| {
                let scalar = vertex.properties[k].scalar.expect("checked above");
                scalar.read_le(&rec[offsets[k]..])
            };
            let points = body[offset..expected]
                .chunks_exact(stride)
                .map(|rec| Point {
                    x: read(rec, x),
                    y: read(rec, y),
                    z: read(rec, z),
                    intensity: intensity.map(|k| read(rec, k)).unwrap_or(0.0),
                })
                .collect();
            Ok(points)
        }
    }
}

pub fn write_ply(cloud: &PointCloud, encoding: Encoding) -> Vec<u8> {
    let mut out = Vec::new();
    let format = match encoding {
        Encoding::Ascii => "ascii",
        Encoding::Binary => "binary_little_endian",
    };
    write!(
        out,
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\nend_header\n",
        cloud.points.len()
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
