//! The `HLC1` binary cloud format.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "HLC1"                      4-byte magic
//! u64 N                       point count
//! u32 C                       class count
//! C x { u16 len, len bytes UTF-8 name, u8 background flag }
//! N x 3 f32                   coordinates
//! u8 presence flags           bit 0 colors, bit 1 labels, bit 2 offsets, bit 3 instance ids
//! [N x 3 u8]                  colors
//! [N u16]                     semantic labels
//! [N x 3 f32]                 offsets
//! [N i32]                     instance ids (-1 = none)
//! ```

use super::{ClassInfo, ClassTable, CloudError, LabeledCloud, Point3};

pub const MAGIC: &[u8; 4] = b"HLC1";

const HAS_COLORS: u8 = 1 << 0;
const HAS_LABELS: u8 = 1 << 1;
const HAS_OFFSETS: u8 = 1 << 2;
const HAS_INSTANCES: u8 = 1 << 3;

pub fn encode(cloud: &LabeledCloud) -> Vec<u8> {
    let n = cloud.len();
    let mut out = Vec::with_capacity(64 + n * 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let table = cloud.class_table();
    out.extend_from_slice(&(table.len() as u32).to_le_bytes());
    for (_, class) in table.iter() {
        let name = class.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(class.background as u8);
    }
    for p in cloud.points() {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut flags = 0u8;
    if cloud.colors().is_some() {
        flags |= HAS_COLORS;
    }
    if cloud.labels().is_some() {
        flags |= HAS_LABELS;
    }
    if cloud.offsets().is_some() {
        flags |= HAS_OFFSETS;
    }
    if cloud.instance_ids().is_some() {
        flags |= HAS_INSTANCES;
    }
    out.push(flags);
    if let Some(colors) = cloud.colors() {
        for c in colors {
            out.extend_from_slice(c);
        }
    }
    if let Some(labels) = cloud.labels() {
        for l in labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
    }
    if let Some(offsets) = cloud.offsets() {
        for o in offsets {
            for v in o {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    if let Some(ids) = cloud.instance_ids() {
        for id in ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8], CloudError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            CloudError::parse(self.pos as u64, format!("truncated payload reading {what}"))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self, what: &str) -> Result<[u8; K], CloudError> {
        Ok(self.take(K, what)?.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &str) -> Result<u8, CloudError> {
        Ok(self.array::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, CloudError> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32, CloudError> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, CloudError> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    fn f32(&mut self, what: &str) -> Result<f32, CloudError> {
        Ok(f32::from_le_bytes(self.array(what)?))
    }

    fn i32(&mut self, what: &str) -> Result<i32, CloudError> {
        Ok(i32::from_le_bytes(self.array(what)?))
    }

    /// Fails early when `count` records of `size` bytes cannot fit.
    fn ensure(&self, count: u64, size: u64, what: &str) -> Result<(), CloudError> {
        let need = count.checked_mul(size);
        let have = (self.buf.len() - self.pos) as u64;
        match need {
            Some(need) if need <= have => Ok(()),
            _ => Err(CloudError::parse(
                self.pos as u64,
                format!("truncated payload: {what} needs {count} x {size} bytes, {have} remain"),
            )),
        }
    }
}

pub fn decode(buf: &[u8]) -> Result<LabeledCloud, CloudError> {
    let mut r = Reader { buf, pos: 0 };
    let magic = r.array::<4>("magic")?;
    if &magic != MAGIC {
        return Err(CloudError::parse(0, "bad magic, expected \"HLC1\""));
    }
    let n = r.u64("point count")?;
    if n == 0 {
        return Err(CloudError::parse(4, "point count is zero"));
    }
    let class_count = r.u32("class count")?;
    r.ensure(class_count as u64, 3, "class table")?;
    let mut classes = Vec::with_capacity(class_count as usize);
    for _ in 0..class_count {
        let at = r.pos as u64;
        let len = r.u16("class name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "class name")?)
            .map_err(|_| CloudError::parse(at, "class name is not UTF-8"))?;
        let bg_at = r.pos as u64;
        let background = match r.u8("background flag")? {
            0 => false,
            1 => true,
            other => return Err(CloudError::parse(bg_at, format!("background flag {other} is not 0/1"))),
        };
        classes.push(ClassInfo::new(name, background));
    }
    let table_at = r.pos as u64;
    let table = ClassTable::new(classes).map_err(|e| CloudError::parse(table_at, e.to_string()))?;

    r.ensure(n, 12, "coordinates")?;
    let n = n as usize;
    let mut points = Vec::with_capacity(n);
    for index in 0..n {
        let offset = r.pos as u64;
        let p = Point3::new(r.f32("x")?, r.f32("y")?, r.f32("z")?);
        if !p.is_finite() {
            return Err(CloudError::NonFinite { index, offset });
        }
        points.push(p);
    }
    let flags_at = r.pos as u64;
    let flags = r.u8("presence flags")?;
    if flags & !(HAS_COLORS | HAS_LABELS | HAS_OFFSETS | HAS_INSTANCES) != 0 {
        return Err(CloudError::parse(flags_at, format!("unknown presence flags {flags:#04x}")));
    }
    let mut cloud = LabeledCloud::new(points, table.clone())?;
    if flags & HAS_COLORS != 0 {
        r.ensure(n as u64, 3, "colors")?;
        let colors = (0..n).map(|_| r.array::<3>("color")).collect::<Result<Vec<_>, _>>()?;
        cloud = cloud.with_colors(colors)?;
    }
    if flags & HAS_LABELS != 0 {
        r.ensure(n as u64, 2, "labels")?;
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.pos as u64;
            let l = r.u16("label")?;
            if l as usize >= table.len() {
                return Err(CloudError::parse(at, format!("label {l} outside class table")));
            }
            labels.push(l);
        }
        cloud = cloud.with_labels(labels)?;
    }
    if flags & HAS_OFFSETS != 0 {
        r.ensure(n as u64, 12, "offsets")?;
        let mut offsets = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.pos as u64;
            let o = [r.f32("offset")?, r.f32("offset")?, r.f32("offset")?];
            if o.iter().any(|v| !v.is_finite()) {
                return Err(CloudError::parse(at, "non-finite offset"));
            }
            offsets.push(o);
        }
        cloud = cloud.with_offsets(offsets)?;
    }
    if flags & HAS_INSTANCES != 0 {
        r.ensure(n as u64, 4, "instance ids")?;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.pos as u64;
            let id = r.i32("instance id")?;
            if id < -1 {
                return Err(CloudError::parse(at, format!("instance id {id} below -1")));
            }
            ids.push(id);
        }
        cloud = cloud.with_instance_ids(ids)?;
    }
    if r.pos != buf.len() {
        return Err(CloudError::parse(r.pos as u64, "trailing bytes after payload"));
    }
    Ok(cloud)
}
