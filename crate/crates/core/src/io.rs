//! Point cloud readers and writers for XYZ, PLY and PCD files.
//!
//! Only geometry is kept: x/y/z are read as `f64`, every other element or
//! property is skipped. Files are read through a buffered stream.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PqmError, Result};
use crate::model::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudFormat {
    XyzAscii,
    PlyAscii,
    PlyBinaryLe,
    PcdAscii,
}

impl CloudFormat {
    pub const ALL: [CloudFormat; 4] = [
        CloudFormat::XyzAscii,
        CloudFormat::PlyAscii,
        CloudFormat::PlyBinaryLe,
        CloudFormat::PcdAscii,
    ];

    /// Format implied by a file extension. `.ply` maps to ASCII; reading
    /// inspects the header for the actual encoding.
    pub fn from_extension(path: &Path) -> Option<CloudFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "xyz" | "txt" | "pts" => Some(CloudFormat::XyzAscii),
            "ply" => Some(CloudFormat::PlyAscii),
            "pcd" => Some(CloudFormat::PcdAscii),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::XyzAscii => "xyz",
            CloudFormat::PlyAscii | CloudFormat::PlyBinaryLe => "ply",
            CloudFormat::PcdAscii => "pcd",
        }
    }
}

impl FromStr for CloudFormat {
    type Err = PqmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "xyz" | "xyz_ascii" => Ok(CloudFormat::XyzAscii),
            "ply" | "ply_ascii" => Ok(CloudFormat::PlyAscii),
            "ply_binary" | "ply_binary_le" => Ok(CloudFormat::PlyBinaryLe),
            "pcd" | "pcd_ascii" => Ok(CloudFormat::PcdAscii),
            other => Err(PqmError::InvalidInput(format!(
                "unknown cloud format `{other}`"
            ))),
        }
    }
}

/// Reads a cloud. Without an explicit format the extension decides, and PLY
/// files are dispatched on their header's `format` line.
pub fn read_cloud(path: &Path, format: Option<CloudFormat>) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| PqmError::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 16, file);
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_extension(path).ok_or_else(|| {
            PqmError::parse(
                path,
                "file name",
                "cannot infer cloud format from extension",
            )
        })?,
    };
    let points = match format {
        CloudFormat::XyzAscii => read_xyz(&mut reader, path)?,
        CloudFormat::PlyAscii | CloudFormat::PlyBinaryLe => read_ply(&mut reader, path)?,
        CloudFormat::PcdAscii => read_pcd(&mut reader, path)?,
    };
    if points.is_empty() {
        return Err(PqmError::EmptyCloud(format!("file {}", path.display())));
    }
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("cloud")
        .to_owned();
    Ok(PointCloud::from_finite(label, points))
}

pub fn write_cloud(cloud: &PointCloud, path: &Path, format: CloudFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| PqmError::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 16, file);
    let written = match format {
        CloudFormat::XyzAscii => write_xyz(cloud, &mut w),
        CloudFormat::PlyAscii => write_ply(cloud, &mut w, false),
        CloudFormat::PlyBinaryLe => write_ply(cloud, &mut w, true),
        CloudFormat::PcdAscii => write_pcd(cloud, &mut w),
    };
    written
        .and_then(|_| w.flush())
        .map_err(|e| PqmError::io(path, e))
}

fn finite_point(
    x: f64,
    y: f64,
    z: f64,
    path: &Path,
    location: impl Fn() -> String,
) -> Result<Point3> {
    let p = Point3::new(x, y, z);
    if p.is_finite() {
        Ok(p)
    } else {
        Err(PqmError::parse(
            path,
            location(),
            format!("non-finite coordinate {p}"),
        ))
    }
}

fn parse_f64(token: &str, path: &Path, line_no: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| {
        PqmError::parse(
            path,
            format!("line {line_no}"),
            format!("`{token}` is not a number"),
        )
    })
}

// ---------------------------------------------------------------- XYZ

fn read_xyz(reader: &mut impl BufRead, path: &Path) -> Result<Vec<Point3>> {
    let mut points = Vec::new();
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| PqmError::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let mut next = || {
            tok.next().ok_or_else(|| {
                PqmError::parse(
                    path,
                    format!("line {line_no}"),
                    "expected three coordinates",
                )
            })
        };
        let x = parse_f64(next()?, path, line_no)?;
        let y = parse_f64(next()?, path, line_no)?;
        let z = parse_f64(next()?, path, line_no)?;
        points.push(finite_point(x, y, z, path, || format!("line {line_no}"))?);
    }
    Ok(points)
}

fn write_xyz(cloud: &PointCloud, w: &mut impl Write) -> std::io::Result<()> {
    for p in cloud.points() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- PLY

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Scalar> {
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

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

impl Element {
    fn xyz_slots(&self) -> Option<[usize; 3]> {
        let find = |axis: &str| {
            self.properties
                .iter()
                .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
        };
        Some([find("x")?, find("y")?, find("z")?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlyEncoding {
    Ascii,
    BinaryLe,
}

fn read_header_line(reader: &mut impl BufRead, path: &Path, line_no: usize) -> Result<String> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| PqmError::io(path, e))?;
    if n == 0 {
        return Err(PqmError::parse(
            path,
            format!("line {line_no}"),
            "unexpected end of header",
        ));
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_owned())
}

fn read_ply(reader: &mut impl BufRead, path: &Path) -> Result<Vec<Point3>> {
    let magic = read_header_line(reader, path, 1)?;
    if magic.trim() != "ply" {
        return Err(PqmError::parse(path, "line 1", "missing `ply` magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut line_no = 1;
    loop {
        line_no += 1;
        let line = read_header_line(reader, path, line_no)?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| PqmError::parse(path, format!("line {line_no}"), msg.to_owned());
        match toks.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", enc, _version] => {
                encoding = Some(match *enc {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLe,
                    other => return Err(bad(&format!("unsupported PLY encoding `{other}`"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| bad(&format!("bad element count `{count}`")))?;
                elements.push(Element {
                    name: (*name).to_owned(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, _name] => {
                let count = Scalar::parse(count).ok_or_else(|| bad("unknown list count type"))?;
                let item = Scalar::parse(item).ok_or_else(|| bad("unknown list item type"))?;
                elements
                    .last_mut()
                    .ok_or_else(|| bad("property before any element"))?
                    .properties
                    .push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| bad(&format!("unknown property type `{ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| bad("property before any element"))?
                    .properties
                    .push(Property::Scalar {
                        name: (*name).to_owned(),
                        ty,
                    });
            }
            _ => return Err(bad(&format!("unrecognised header line `{line}`"))),
        }
    }
    let encoding =
        encoding.ok_or_else(|| PqmError::parse(path, "header", "missing `format` line"))?;
    let vertex = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| PqmError::parse(path, "header", "no `vertex` element"))?;
    let slots = elements[vertex]
        .xyz_slots()
        .ok_or_else(|| PqmError::parse(path, "header", "vertex element lacks x/y/z"))?;

    match encoding {
        PlyEncoding::Ascii => read_ply_ascii(reader, path, &elements, vertex, slots, line_no),
        PlyEncoding::BinaryLe => read_ply_binary(reader, path, &elements, vertex, slots),
    }
}

fn read_ply_ascii(
    reader: &mut impl BufRead,
    path: &Path,
    elements: &[Element],
    vertex: usize,
    slots: [usize; 3],
    mut line_no: usize,
) -> Result<Vec<Point3>> {
    let mut points = Vec::with_capacity(elements[vertex].count);
    let mut line = String::new();
    for (ei, element) in elements.iter().enumerate() {
        for _ in 0..element.count {
            // Elements after the vertices are not needed.
            if ei > vertex {
                return Ok(points);
            }
            line.clear();
            line_no += 1;
            if reader
                .read_line(&mut line)
                .map_err(|e| PqmError::io(path, e))?
                == 0
            {
                return Err(PqmError::parse(
                    path,
                    format!("line {line_no}"),
                    format!("file ends inside element `{}`", element.name),
                ));
            }
            if ei != vertex {
                continue;
            }
            let mut toks = line.split_whitespace();
            let mut values = [0.0f64; 3];
            for (pi, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { .. } => {
                        let tok = toks.next().ok_or_else(|| {
                            PqmError::parse(path, format!("line {line_no}"), "too few values")
                        })?;
                        if let Some(axis) = slots.iter().position(|&s| s == pi) {
                            values[axis] = parse_f64(tok, path, line_no)?;
                        }
                    }
                    Property::List { .. } => {
                        let count: usize =
                            toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| {
                                PqmError::parse(path, format!("line {line_no}"), "bad list count")
                            })?;
                        for _ in 0..count {
                            toks.next();
                        }
                    }
                }
            }
            points.push(finite_point(values[0], values[1], values[2], path, || {
                format!("line {line_no}")
            })?);
        }
    }
    Ok(points)
}

fn read_exact_at(reader: &mut impl Read, buf: &mut [u8], path: &Path, offset: u64) -> Result<()> {
    reader.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            PqmError::parse(path, format!("data byte {offset}"), "truncated binary body")
        } else {
            PqmError::io(path, e)
        }
    })
}

fn read_ply_binary(
    reader: &mut impl Read,
    path: &Path,
    elements: &[Element],
    vertex: usize,
    slots: [usize; 3],
) -> Result<Vec<Point3>> {
    let mut points = Vec::with_capacity(elements[vertex].count);
    let mut offset = 0u64;
    let mut buf = [0u8; 8];
    for (ei, element) in elements.iter().enumerate().take(vertex + 1) {
        for _ in 0..element.count {
            let mut values = [0.0f64; 3];
            for (pi, prop) in element.properties.iter().enumerate() {
                match *prop {
                    Property::Scalar { ty, .. } => {
                        let b = &mut buf[..ty.size()];
                        read_exact_at(reader, b, path, offset)?;
                        offset += ty.size() as u64;
                        if ei == vertex {
                            if let Some(axis) = slots.iter().position(|&s| s == pi) {
                                values[axis] = ty.decode_le(b);
                            }
                        }
                    }
                    Property::List { count, item } => {
                        let b = &mut buf[..count.size()];
                        read_exact_at(reader, b, path, offset)?;
                        offset += count.size() as u64;
                        let n = count.decode_le(b);
                        if n.is_nan() || n < 0.0 {
                            return Err(PqmError::parse(
                                path,
                                format!("data byte {offset}"),
                                "negative list length",
                            ));
                        }
                        let skip = n as u64 * item.size() as u64;
                        let copied = std::io::copy(&mut reader.take(skip), &mut std::io::sink())
                            .map_err(|e| PqmError::io(path, e))?;
                        if copied != skip {
                            return Err(PqmError::parse(
                                path,
                                format!("data byte {offset}"),
                                "truncated binary body",
                            ));
                        }
                        offset += skip;
                    }
                }
            }
            if ei == vertex {
                points.push(finite_point(values[0], values[1], values[2], path, || {
                    format!("data byte {offset}")
                })?);
            }
        }
    }
    Ok(points)
}

fn write_ply(cloud: &PointCloud, w: &mut impl Write, binary: bool) -> std::io::Result<()> {
    let encoding = if binary {
        "binary_little_endian"
    } else {
        "ascii"
    };
    write!(
        w,
        "ply\nformat {encoding} 1.0\ncomment {}\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.label().replace(['\n', '\r'], " "),
        cloud.len()
    )?;
    for p in cloud.points() {
        if binary {
            w.write_all(&p.x.to_le_bytes())?;
            w.write_all(&p.y.to_le_bytes())?;
            w.write_all(&p.z.to_le_bytes())?;
        } else {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- PCD

fn read_pcd(reader: &mut impl BufRead, path: &Path) -> Result<Vec<Point3>> {
    let mut fields: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut declared: Option<usize> = None;
    let mut line_no = 0;
    loop {
        line_no += 1;
        let line = read_header_line(reader, path, line_no)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let key = toks.next().unwrap_or_default().to_ascii_uppercase();
        let bad = |msg: String| PqmError::parse(path, format!("line {line_no}"), msg);
        match key.as_str() {
            "FIELDS" => fields = toks.map(str::to_owned).collect(),
            "COUNT" => {
                counts = toks
                    .map(|t| t.parse().map_err(|_| bad(format!("bad COUNT `{t}`"))))
                    .collect::<Result<_>>()?
            }
            "POINTS" => {
                let t = toks.next().unwrap_or_default();
                declared = Some(t.parse().map_err(|_| bad(format!("bad POINTS `{t}`")))?);
            }
            "DATA" => {
                let kind = toks.next().unwrap_or_default();
                if kind != "ascii" {
                    return Err(bad(format!("unsupported PCD DATA `{kind}`, only ascii")));
                }
                break;
            }
            "VERSION" | "SIZE" | "TYPE" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
            other => return Err(bad(format!("unknown PCD header key `{other}`"))),
        }
    }
    if counts.is_empty() {
        counts = vec![1; fields.len()];
    }
    if counts.len() != fields.len() {
        return Err(PqmError::parse(
            path,
            "header",
            "FIELDS and COUNT lengths differ",
        ));
    }
    let column = |axis: &str| -> Result<usize> {
        let i = fields
            .iter()
            .position(|f| f == axis)
            .ok_or_else(|| PqmError::parse(path, "header", format!("FIELDS lacks `{axis}`")))?;
        Ok(counts[..i].iter().sum())
    };
    let cols = [column("x")?, column("y")?, column("z")?];
    let width: usize = counts.iter().sum();

    let mut points = Vec::with_capacity(declared.unwrap_or(0));
    let mut line = String::new();
    loop {
        line.clear();
        if reader
            .read_line(&mut line)
            .map_err(|e| PqmError::io(path, e))?
            == 0
        {
            break;
        }
        line_no += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() < width {
            return Err(PqmError::parse(
                path,
                format!("line {line_no}"),
                format!("expected {width} values, found {}", toks.len()),
            ));
        }
        let x = parse_f64(toks[cols[0]], path, line_no)?;
        let y = parse_f64(toks[cols[1]], path, line_no)?;
        let z = parse_f64(toks[cols[2]], path, line_no)?;
        points.push(finite_point(x, y, z, path, || format!("line {line_no}"))?);
    }
    if let Some(n) = declared {
        if n != points.len() {
            return Err(PqmError::parse(
                path,
                format!("line {line_no}"),
                format!("header declares {n} points, body holds {}", points.len()),
            ));
        }
    }
    Ok(points)
}

fn write_pcd(cloud: &PointCloud, w: &mut impl Write) -> std::io::Result<()> {
    let n = cloud.len();
    write!(
        w,
        "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z\n\
         SIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\nWIDTH {n}\nHEIGHT 1\n\
         VIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii\n"
    )?;
    for p in cloud.points() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}
