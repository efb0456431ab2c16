//! PLY reader and writer for geometry, color and semantic labels.
//!
//! Reads `ascii`, `binary_little_endian` and `binary_big_endian` files. Only
//! the `vertex` element is interpreted (`x`, `y`, `z`, optional `red`,
//! `green`, `blue` and `label`); other elements are skipped. The class table
//! travels in `comment hida_class <0|1> <name>` header lines; without them the
//! default ScanNet table is assumed.

use super::{ClassInfo, ClassTable, CloudError, LabeledCloud, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

const CLASS_COMMENT: &str = "comment hida_class ";

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
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
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

    fn read(self, b: &[u8], little: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let a: [u8; $n] = b[..$n].try_into().unwrap();
                (if little { <$t>::from_le_bytes(a) } else { <$t>::from_be_bytes(a) }) as f64
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    Binary { little: bool },
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    classes: Vec<ClassInfo>,
    body_start: usize,
}

fn parse_header(buf: &[u8]) -> Result<Header, CloudError> {
    let mut pos = 0usize;
    let next_line = |pos: &mut usize| -> Result<(usize, String), CloudError> {
        let start = *pos;
        let rel = buf[start..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CloudError::parse(start as u64, "unterminated PLY header"))?;
        *pos = start + rel + 1;
        let line = std::str::from_utf8(&buf[start..start + rel])
            .map_err(|_| CloudError::parse(start as u64, "header is not valid text"))?;
        Ok((start, line.trim_end_matches('\r').to_string()))
    };

    let (_, first) = next_line(&mut pos)?;
    if first.trim() != "ply" {
        return Err(CloudError::parse(0, "missing \"ply\" magic line"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut classes = Vec::new();
    loop {
        let (at, line) = next_line(&mut pos)?;
        let at = at as u64;
        if let Some(rest) = line.strip_prefix(CLASS_COMMENT) {
            let (flag, name) = rest
                .split_once(' ')
                .ok_or_else(|| CloudError::parse(at, "malformed hida_class comment"))?;
            let background = match flag {
                "0" => false,
                "1" => true,
                _ => return Err(CloudError::parse(at, "hida_class flag must be 0 or 1")),
            };
            classes.push(ClassInfo::new(name, background));
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                let f = match tok.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::Binary { little: true },
                    Some("binary_big_endian") => Format::Binary { little: false },
                    other => {
                        return Err(CloudError::parse(at, format!("unknown PLY format {other:?}")))
                    }
                };
                format = Some(f);
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| CloudError::parse(at, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| CloudError::parse(at, "element without valid count"))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| CloudError::parse(at, "property before any element"))?;
                let ty = tok.next().ok_or_else(|| CloudError::parse(at, "property without type"))?;
                let kind = if ty == "list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => PropKind::List { count, item },
                        _ => return Err(CloudError::parse(at, "malformed list property")),
                    }
                } else {
                    PropKind::Scalar(
                        Scalar::parse(ty)
                            .ok_or_else(|| CloudError::parse(at, format!("unknown property type {ty:?}")))?,
                    )
                };
                let name = tok.next().ok_or_else(|| CloudError::parse(at, "property without name"))?;
                el.props.push(Property { name: name.to_string(), kind });
            }
            Some("end_header") => break,
            Some(other) => return Err(CloudError::parse(at, format!("unexpected header keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| CloudError::parse(0, "missing format line"))?;
    Ok(Header { format, elements, classes, body_start: pos })
}

#[derive(Default)]
struct VertexLayout {
    xyz: [Option<usize>; 3],
    rgb: [Option<usize>; 3],
    label: Option<usize>,
}

impl VertexLayout {
    fn of(el: &Element) -> Self {
        let mut l = VertexLayout::default();
        for (i, p) in el.props.iter().enumerate() {
            let slot = match p.name.as_str() {
                "x" => &mut l.xyz[0],
                "y" => &mut l.xyz[1],
                "z" => &mut l.xyz[2],
                "red" | "r" => &mut l.rgb[0],
                "green" | "g" => &mut l.rgb[1],
                "blue" | "b" => &mut l.rgb[2],
                "label" | "semantic_label" => &mut l.label,
                _ => continue,
            };
            *slot = Some(i);
        }
        l
    }

    fn has_color(&self) -> bool {
        self.rgb.iter().all(Option::is_some)
    }
}

struct Collected {
    points: Vec<Point3>,
    colors: Vec<[u8; 3]>,
    labels: Vec<u16>,
}

impl Collected {
    fn push(
        &mut self,
        layout: &VertexLayout,
        values: &[f64],
        props: &[Property],
        index: usize,
        at: u64,
    ) -> Result<(), CloudError> {
        let get = |slot: Option<usize>| slot.map(|i| values[i]);
        let p = Point3::new(
            get(layout.xyz[0]).unwrap_or(0.0) as f32,
            get(layout.xyz[1]).unwrap_or(0.0) as f32,
            get(layout.xyz[2]).unwrap_or(0.0) as f32,
        );
        if !p.is_finite() {
            return Err(CloudError::NonFinite { index, offset: at });
        }
        self.points.push(p);
        if layout.has_color() {
            let mut c = [0u8; 3];
            for (k, slot) in layout.rgb.iter().enumerate() {
                let i = slot.unwrap();
                let v = values[i];
                let scaled = match props[i].kind {
                    PropKind::Scalar(Scalar::F32 | Scalar::F64) => v * 255.0,
                    _ => v,
                };
                c[k] = scaled.round().clamp(0.0, 255.0) as u8;
            }
            self.colors.push(c);
        }
        if let Some(v) = get(layout.label) {
            if v < 0.0 || v > u16::MAX as f64 || v.fract() != 0.0 {
                return Err(CloudError::parse(at, format!("vertex {index}: label {v} is not a class id")));
            }
            self.labels.push(v as u16);
        }
        Ok(())
    }
}

pub fn decode(buf: &[u8]) -> Result<LabeledCloud, CloudError> {
    let header = parse_header(buf)?;
    let vertex_idx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| CloudError::parse(0, "no vertex element"))?;
    let vertex = &header.elements[vertex_idx];
    let layout = VertexLayout::of(vertex);
    if layout.xyz.iter().any(Option::is_none) {
        return Err(CloudError::parse(0, "vertex element lacks x, y or z"));
    }
    let mut out = Collected {
        points: Vec::with_capacity(vertex.count),
        colors: Vec::new(),
        labels: Vec::new(),
    };

    match header.format {
        Format::Ascii => read_ascii(buf, &header, vertex_idx, &layout, &mut out)?,
        Format::Binary { little } => read_binary(buf, &header, vertex_idx, little, &layout, &mut out)?,
    }

    let table = if header.classes.is_empty() {
        ClassTable::scannet()
    } else {
        ClassTable::new(header.classes).map_err(|e| CloudError::parse(0, e.to_string()))?
    };
    let mut cloud = LabeledCloud::new(out.points, table)?;
    if layout.has_color() {
        cloud = cloud.with_colors(out.colors)?;
    }
    if layout.label.is_some() {
        cloud = cloud.with_labels(out.labels)?;
    }
    Ok(cloud)
}

fn read_ascii(
    buf: &[u8],
    header: &Header,
    vertex_idx: usize,
    layout: &VertexLayout,
    out: &mut Collected,
) -> Result<(), CloudError> {
    let mut pos = header.body_start;
    let line_at = |pos: &mut usize| -> Result<(u64, &str), CloudError> {
        // skip blank lines
        loop {
            if *pos >= buf.len() {
                return Err(CloudError::parse(*pos as u64, "truncated payload: missing element lines"));
            }
            let start = *pos;
            let rel = buf[start..].iter().position(|&b| b == b'\n').unwrap_or(buf.len() - start);
            *pos = start + rel + 1;
            let line = std::str::from_utf8(&buf[start..start + rel])
                .map_err(|_| CloudError::parse(start as u64, "body line is not valid text"))?;
            if !line.trim().is_empty() {
                return Ok((start as u64, line));
            }
        }
    };
    for (ei, el) in header.elements.iter().enumerate() {
        for index in 0..el.count {
            let (at, line) = line_at(&mut pos)?;
            if ei != vertex_idx {
                continue;
            }
            let mut tok = line.split_whitespace();
            let mut values = Vec::with_capacity(el.props.len());
            let mut next = |what: &str| -> Result<f64, CloudError> {
                let t = tok
                    .next()
                    .ok_or_else(|| CloudError::parse(at, format!("vertex {index}: missing {what}")))?;
                t.parse::<f64>()
                    .map_err(|_| CloudError::parse(at, format!("vertex {index}: bad number {t:?}")))
            };
            for p in &el.props {
                match p.kind {
                    PropKind::Scalar(_) => values.push(next(&p.name)?),
                    PropKind::List { .. } => {
                        let n = next(&p.name)? as usize;
                        for _ in 0..n {
                            next(&p.name)?;
                        }
                        values.push(f64::NAN);
                    }
                }
            }
            out.push(layout, &values, &el.props, index, at)?;
        }
    }
    Ok(())
}

fn read_binary(
    buf: &[u8],
    header: &Header,
    vertex_idx: usize,
    little: bool,
    layout: &VertexLayout,
    out: &mut Collected,
) -> Result<(), CloudError> {
    let mut pos = header.body_start;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8], CloudError> {
        if *pos + len > buf.len() {
            return Err(CloudError::parse(*pos as u64, "truncated payload"));
        }
        let s = &buf[*pos..*pos + len];
        *pos += len;
        Ok(s)
    };
    for (ei, el) in header.elements.iter().enumerate() {
        let fixed: Option<usize> = el
            .props
            .iter()
            .map(|p| match p.kind {
                PropKind::Scalar(s) => Some(s.size()),
                PropKind::List { .. } => None,
            })
            .sum();
        if ei != vertex_idx {
            if let Some(stride) = fixed {
                take(&mut pos, stride * el.count)?;
                continue;
            }
        }
        let mut values = Vec::with_capacity(el.props.len());
        for index in 0..el.count {
            let at = pos as u64;
            values.clear();
            for p in &el.props {
                match p.kind {
                    PropKind::Scalar(s) => values.push(s.read(take(&mut pos, s.size())?, little)),
                    PropKind::List { count, item } => {
                        let n = count.read(take(&mut pos, count.size())?, little);
                        if !(0.0..=u32::MAX as f64).contains(&n) {
                            return Err(CloudError::parse(at, "negative list length"));
                        }
                        take(&mut pos, n as usize * item.size())?;
                        values.push(f64::NAN);
                    }
                }
            }
            if ei == vertex_idx {
                out.push(layout, &values, &el.props, index, at)?;
            }
        }
    }
    Ok(())
}

/// Writes x, y, z as float, colors as uchar and labels as ushort. Offsets and
/// instance ids are not representable and are dropped.
pub fn encode(cloud: &LabeledCloud, encoding: PlyEncoding) -> Vec<u8> {
    let mut h = String::from("ply\n");
    h.push_str(match encoding {
        PlyEncoding::Ascii => "format ascii 1.0\n",
        PlyEncoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    if cloud.labels().is_some() {
        for (_, c) in cloud.class_table().iter() {
            h.push_str(&format!("{CLASS_COMMENT}{} {}\n", c.background as u8, c.name));
        }
    }
    h.push_str(&format!("element vertex {}\n", cloud.len()));
    h.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.colors().is_some() {
        h.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    if cloud.labels().is_some() {
        h.push_str("property ushort label\n");
    }
    h.push_str("end_header\n");
    let mut out = h.into_bytes();
    for (i, p) in cloud.points().iter().enumerate() {
        let color = cloud.colors().map(|c| c[i]);
        let label = cloud.labels().map(|l| l[i]);
        match encoding {
            PlyEncoding::Ascii => {
                let mut line = format!("{} {} {}", p.x, p.y, p.z);
                if let Some(c) = color {
                    line.push_str(&format!(" {} {} {}", c[0], c[1], c[2]));
                }
                if let Some(l) = label {
                    line.push_str(&format!(" {l}"));
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(c) = color {
                    out.extend_from_slice(&c);
                }
                if let Some(l) = label {
                    out.extend_from_slice(&l.to_le_bytes());
                }
            }
        }
    }
    out
}
