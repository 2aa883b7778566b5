//! OBJ and PLY loading, OBJ writing.
//!
//! Faces with more than three corners are fan-triangulated from their first
//! corner. Only positions and faces are read; normals, texture coordinates
//! and materials are ignored.

use std::fs;
use std::io::{BufRead, Cursor, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt};

use super::{Point, TriangleMesh, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            _ => Err(Error::UnsupportedFormat(path.display().to_string())),
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Loads a mesh; `format` defaults to the file extension.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let bytes = fs::read(path)?;
    match format {
        MeshFormat::Obj => parse_obj(&bytes),
        MeshFormat::Ply => parse_ply(&bytes),
    }
}

fn fan(corners: &[u32], out: &mut Vec<[u32; 3]>) {
    for i in 1..corners.len().saturating_sub(1) {
        out.push([corners[0], corners[i], corners[i + 1]]);
    }
}

pub fn parse_obj(bytes: &[u8]) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut corners = Vec::new();
    let mut normal_list: Vec<Vector> = Vec::new();
    let mut vertex_normals: Vec<Option<u32>> = Vec::new();

    for (line_no, line) in Cursor::new(bytes).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(format!("line {}", line_no + 1), e.to_string()))?;
        let loc = || format!("line {}", line_no + 1);
        let line = line.split('#').next().unwrap_or("");
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for slot in &mut xyz {
                    let tok = fields
                        .next()
                        .ok_or_else(|| Error::parse(loc(), "vertex needs 3 coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| Error::parse(loc(), format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Point::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("vn") => {
                let mut xyz = [0.0; 3];
                for slot in &mut xyz {
                    let tok = fields
                        .next()
                        .ok_or_else(|| Error::parse(loc(), "normal needs 3 components"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| Error::parse(loc(), format!("bad normal component {tok:?}")))?;
                }
                normal_list.push(Vector::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                corners.clear();
                vertex_normals.resize(vertices.len(), None);
                for tok in fields {
                    let mut parts = tok.split('/');
                    let v = resolve_obj_index(parts.next().unwrap_or(""), vertices.len(), tok, &loc)?;
                    if let Some(n) = parts.nth(1).filter(|s| !s.is_empty()) {
                        let n = resolve_obj_index(n, normal_list.len(), tok, &loc)?;
                        // The first normal seen for a vertex wins.
                        vertex_normals[v as usize].get_or_insert(n);
                    }
                    corners.push(v);
                }
                if corners.len() < 3 {
                    return Err(Error::parse(loc(), "face needs at least 3 vertices"));
                }
                fan(&corners, &mut triangles);
            }
            _ => {}
        }
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    if vertex_normals.iter().all(Option::is_none) {
        return Ok(mesh);
    }
    vertex_normals.resize(mesh.vertex_count(), None);
    let normals = vertex_normals
        .into_iter()
        .map(|n| {
            let n = normal_list[n? as usize];
            let len = n.norm();
            (len > 0.0 && len.is_finite()).then(|| n / len)
        })
        .collect();
    mesh.with_normals(normals)
}

/// Resolves a 1-based (or negative, relative) OBJ index against `len` items.
fn resolve_obj_index(field: &str, len: usize, tok: &str, loc: &impl Fn() -> String) -> Result<u32> {
    let idx: i64 = field
        .parse()
        .map_err(|_| Error::parse(loc(), format!("bad face index {tok:?}")))?;
    let resolved = match idx {
        0 => return Err(Error::parse(loc(), "face index 0 is invalid")),
        i if i > 0 => i - 1,
        i => len as i64 + i,
    };
    if resolved < 0 || resolved >= len as i64 {
        return Err(Error::parse(loc(), format!("face index {idx} out of range")));
    }
    Ok(resolved as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
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

    fn read_binary(self, r: &mut impl Read) -> std::io::Result<f64> {
        Ok(match self {
            Scalar::I8 => r.read_i8()? as f64,
            Scalar::U8 => r.read_u8()? as f64,
            Scalar::I16 => r.read_i16::<LittleEndian>()? as f64,
            Scalar::U16 => r.read_u16::<LittleEndian>()? as f64,
            Scalar::I32 => r.read_i32::<LittleEndian>()? as f64,
            Scalar::U32 => r.read_u32::<LittleEndian>()? as f64,
            Scalar::F32 => r.read_f32::<LittleEndian>()? as f64,
            Scalar::F64 => r.read_f64::<LittleEndian>()?,
        })
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

struct PlyHeader {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_ply_header(bytes: &[u8]) -> Result<PlyHeader> {
    let mut offset = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        line_no += 1;
        let loc = format!("header line {line_no}");
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(loc.clone(), "unterminated PLY header"))?;
        let line = std::str::from_utf8(&bytes[offset..offset + end])
            .map_err(|_| Error::parse(loc.clone(), "header is not UTF-8"))?
            .trim_end_matches('\r')
            .trim();
        offset += end + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if line != "ply" {
                return Err(Error::parse(loc, "missing 'ply' magic"));
            }
            continue;
        }
        match fields.as_slice() {
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => {
                encoding = Some(PlyEncoding::BinaryLittleEndian)
            }
            ["format", other, ..] => {
                return Err(Error::UnsupportedFormat(format!("PLY encoding {other}")))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse(loc.clone(), "bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(loc.clone(), "property before element"))?;
                let count = Scalar::parse(count)
                    .ok_or_else(|| Error::parse(loc.clone(), "bad list count type"))?;
                let item = Scalar::parse(item)
                    .ok_or_else(|| Error::parse(loc.clone(), "bad list item type"))?;
                el.properties.push(Property::List {
                    name: name.to_string(),
                    count,
                    item,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(loc.clone(), "property before element"))?;
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| Error::parse(loc.clone(), format!("bad property type {ty}")))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(Error::parse(loc, format!("unexpected header line {line:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse("header", "missing format line"))?;
    Ok(PlyHeader {
        encoding,
        elements,
        body_offset: offset,
    })
}

/// One decoded element record: scalar values and list values, in property order.
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

struct AsciiBody<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
    consumed: usize,
}

impl AsciiBody<'_> {
    fn next(&mut self) -> Result<f64> {
        self.consumed += 1;
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| Error::parse(format!("body token {}", self.consumed), "unexpected end of data"))?;
        tok.parse()
            .map_err(|_| Error::parse(format!("body token {}", self.consumed), format!("bad number {tok:?}")))
    }
}

pub fn parse_ply(bytes: &[u8]) -> Result<TriangleMesh> {
    let header = parse_ply_header(bytes)?;
    let body = &bytes[header.body_offset..];

    let mut ascii = match header.encoding {
        PlyEncoding::Ascii => Some(AsciiBody {
            tokens: std::str::from_utf8(body)
                .map_err(|_| Error::parse("body", "ASCII body is not UTF-8"))?
                .split_ascii_whitespace(),
            consumed: 0,
        }),
        PlyEncoding::BinaryLittleEndian => None,
    };
    let mut binary = Cursor::new(body);

    let mut read_scalar = |ty: Scalar, ascii: &mut Option<AsciiBody>| -> Result<f64> {
        match ascii {
            Some(a) => a.next(),
            None => ty.read_binary(&mut binary).map_err(|_| {
                Error::parse(format!("byte offset {}", header.body_offset + binary.position() as usize), "truncated binary body")
            }),
        }
    };

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for element in &header.elements {
        let coord_slots: Vec<Option<usize>> = element
            .properties
            .iter()
            .map(|p| match p {
                Property::Scalar { name, .. } => ["x", "y", "z"].iter().position(|c| c == name),
                Property::List { .. } => None,
            })
            .collect();
        if element.name == "vertex" && coord_slots.iter().flatten().count() != 3 {
            return Err(Error::parse("header", "vertex element lacks x/y/z"));
        }
        for _ in 0..element.count {
            let mut record = Vec::with_capacity(element.properties.len());
            for prop in &element.properties {
                match prop {
                    Property::Scalar { ty, .. } => {
                        record.push(Value::Scalar(read_scalar(*ty, &mut ascii)?))
                    }
                    Property::List { count, item, .. } => {
                        let n = read_scalar(*count, &mut ascii)?;
                        if !(n >= 0.0 && n.fract() == 0.0) {
                            return Err(Error::parse("body", format!("bad list length {n}")));
                        }
                        let items = (0..n as usize)
                            .map(|_| read_scalar(*item, &mut ascii))
                            .collect::<Result<Vec<_>>>()?;
                        record.push(Value::List(items));
                    }
                }
            }
            match element.name.as_str() {
                "vertex" => {
                    let mut xyz = [0.0; 3];
                    for (slot, value) in coord_slots.iter().zip(&record) {
                        if let (Some(axis), Value::Scalar(v)) = (slot, value) {
                            xyz[*axis] = *v;
                        }
                    }
                    vertices.push(Point::new(xyz[0], xyz[1], xyz[2]));
                }
                "face" => {
                    let list = element
                        .properties
                        .iter()
                        .zip(&record)
                        .find_map(|(p, v)| match (p, v) {
                            (Property::List { name, .. }, Value::List(items))
                                if name == "vertex_indices" || name == "vertex_index" =>
                            {
                                Some(items)
                            }
                            _ => None,
                        })
                        .ok_or_else(|| Error::parse("header", "face element lacks vertex_indices"))?;
                    let corners = list
                        .iter()
                        .map(|&i| {
                            if i < 0.0 || i.fract() != 0.0 || i > u32::MAX as f64 {
                                Err(Error::parse("face", format!("bad vertex index {i}")))
                            } else {
                                Ok(i as u32)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if corners.len() < 3 {
                        return Err(Error::parse("face", "face needs at least 3 vertices"));
                    }
                    fan(&corners, &mut triangles);
                }
                _ => {}
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Writes `v`/`f` records, plus one `vn` per vertex when the mesh has
/// normals. A vertex without a normal gets a zero `vn`, which reads back
/// as no normal.
pub fn write_obj(mesh: &TriangleMesh, mut out: impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    match mesh.normals() {
        Some(normals) => {
            for n in normals {
                let n = n.unwrap_or_else(Vector::zeros);
                writeln!(out, "vn {} {} {}", n.x, n.y, n.z)?;
            }
            for t in mesh.triangles() {
                let [a, b, c] = t.map(|i| i + 1);
                writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}")?;
            }
        }
        None => {
            for t in mesh.triangles() {
                writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
            }
        }
    }
    Ok(())
}
