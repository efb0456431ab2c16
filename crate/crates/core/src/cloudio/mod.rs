//! Point cloud containers, file formats and the synthetic scene oracle.
//!
//! Coordinates live in a fixed world frame with z up; the ground plane is XY.
//! Everything that goes through the pipeline is a [`LabeledCloud`]: points plus
//! optional colors, semantic labels, offset vectors and ground-truth instance
//! ids, all index-aligned.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod hlc1;
mod oracle;
pub mod ply;
mod synth;

pub use oracle::{oracle_predict, OracleConfig};
pub use synth::{random_scene_spec, synth_scene, ObjectSpec, RandomSceneParams, RoomSpec, SceneSpec};

/// Ground-truth sentinel for points that belong to no instance.
pub const NO_INSTANCE: i32 = -1;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("non-finite coordinate at vertex {index} (byte {offset})")]
    NonFinite { index: usize, offset: u64 },
    #[error("invalid cloud: {0}")]
    Invalid(String),
    #[error("inseparable scene: {0}")]
    InseparableScene(String),
    #[error("cloud is unlabeled (needs {0})")]
    Unlabeled(&'static str),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CloudError {
    pub(crate) fn parse(offset: u64, message: impl Into<String>) -> Self {
        CloudError::Parse { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

impl Point3 {
    pub const fn new(x: f32, y: f32, z: f32) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    #[serde(default)]
    pub background: bool,
}

impl ClassInfo {
    pub fn new(name: impl Into<String>, background: bool) -> Self {
        ClassInfo { name: name.into(), background }
    }
}

/// Ordered class list; a semantic label is an index into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassTable {
    classes: Vec<ClassInfo>,
}

/// The 18 ScanNet instance classes, preceded by the two background classes.
const SCANNET_INSTANCE_CLASSES: [&str; 18] = [
    "cabinet",
    "bed",
    "chair",
    "sofa",
    "table",
    "door",
    "window",
    "bookshelf",
    "picture",
    "counter",
    "desk",
    "curtain",
    "refrigerator",
    "shower curtain",
    "toilet",
    "sink",
    "bathtub",
    "otherfurniture",
];

impl ClassTable {
    pub fn new(classes: Vec<ClassInfo>) -> Result<Self, CloudError> {
        if classes.is_empty() {
            return Err(CloudError::Invalid("class table is empty".into()));
        }
        if classes.len() > u16::MAX as usize {
            return Err(CloudError::Invalid("class table exceeds u16 label range".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].iter().any(|o| o.name == c.name) {
                return Err(CloudError::Invalid(format!("duplicate class name {:?}", c.name)));
            }
        }
        Ok(ClassTable { classes })
    }

    /// `wall` and `floor` (background) followed by the ScanNet instance classes.
    pub fn scannet() -> Self {
        let mut classes = vec![ClassInfo::new("wall", true), ClassInfo::new("floor", true)];
        classes.extend(SCANNET_INSTANCE_CLASSES.iter().map(|n| ClassInfo::new(*n, false)));
        ClassTable { classes }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, id: u16) -> Option<&ClassInfo> {
        self.classes.get(id as usize)
    }

    pub fn name(&self, id: u16) -> &str {
        self.classes.get(id as usize).map(|c| c.name.as_str()).unwrap_or("unknown")
    }

    pub fn id_of(&self, name: &str) -> Option<u16> {
        self.classes.iter().position(|c| c.name == name).map(|i| i as u16)
    }

    pub fn is_background(&self, id: u16) -> bool {
        self.classes.get(id as usize).is_some_and(|c| c.background)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, &ClassInfo)> {
        self.classes.iter().enumerate().map(|(i, c)| (i as u16, c))
    }
}

impl Default for ClassTable {
    fn default() -> Self {
        ClassTable::scannet()
    }
}

/// An index-aligned point cloud with optional per-point annotations.
///
/// Labels and offsets are the segmentation network's outputs; a cloud that
/// lacks either is usable only as geometry. Instance ids carry ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    points: Vec<Point3>,
    colors: Option<Vec<[u8; 3]>>,
    labels: Option<Vec<u16>>,
    offsets: Option<Vec<[f32; 3]>>,
    instance_ids: Option<Vec<i32>>,
    class_table: ClassTable,
}

impl LabeledCloud {
    pub fn new(points: Vec<Point3>, class_table: ClassTable) -> Result<Self, CloudError> {
        if points.is_empty() {
            return Err(CloudError::Invalid("cloud must contain at least one point".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(CloudError::Invalid(format!("non-finite coordinate at point {i}")));
        }
        Ok(LabeledCloud {
            points,
            colors: None,
            labels: None,
            offsets: None,
            instance_ids: None,
            class_table,
        })
    }

    fn check_len(&self, what: &str, len: usize) -> Result<(), CloudError> {
        if len != self.points.len() {
            return Err(CloudError::Invalid(format!(
                "{what} has {len} entries, cloud has {} points",
                self.points.len()
            )));
        }
        Ok(())
    }

    pub fn with_colors(mut self, colors: Vec<[u8; 3]>) -> Result<Self, CloudError> {
        self.check_len("colors", colors.len())?;
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u16>) -> Result<Self, CloudError> {
        self.check_len("labels", labels.len())?;
        if let Some(i) = labels.iter().position(|&l| l as usize >= self.class_table.len()) {
            return Err(CloudError::Invalid(format!(
                "label {} at point {i} is outside the class table ({} classes)",
                labels[i],
                self.class_table.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_offsets(mut self, offsets: Vec<[f32; 3]>) -> Result<Self, CloudError> {
        self.check_len("offsets", offsets.len())?;
        if let Some(i) = offsets.iter().position(|o| o.iter().any(|v| !v.is_finite())) {
            return Err(CloudError::Invalid(format!("non-finite offset at point {i}")));
        }
        self.offsets = Some(offsets);
        Ok(self)
    }

    pub fn with_instance_ids(mut self, ids: Vec<i32>) -> Result<Self, CloudError> {
        self.check_len("instance ids", ids.len())?;
        if let Some(i) = ids.iter().position(|&id| id < NO_INSTANCE) {
            return Err(CloudError::Invalid(format!("negative instance id {} at point {i}", ids[i])));
        }
        self.instance_ids = Some(ids);
        Ok(self)
    }

    pub fn without_instance_ids(mut self) -> Self {
        self.instance_ids = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn labels(&self) -> Option<&[u16]> {
        self.labels.as_deref()
    }

    pub fn offsets(&self) -> Option<&[[f32; 3]]> {
        self.offsets.as_deref()
    }

    pub fn instance_ids(&self) -> Option<&[i32]> {
        self.instance_ids.as_deref()
    }

    pub fn class_table(&self) -> &ClassTable {
        &self.class_table
    }

    /// True when both semantic labels and offsets are present.
    pub fn is_labeled(&self) -> bool {
        self.labels.is_some() && self.offsets.is_some()
    }

    pub fn require_labels(&self) -> Result<&[u16], CloudError> {
        self.labels().ok_or(CloudError::Unlabeled("semantic labels"))
    }

    pub fn require_offsets(&self) -> Result<&[[f32; 3]], CloudError> {
        self.offsets().ok_or(CloudError::Unlabeled("offset vectors"))
    }

    /// Point `i` moved by its offset vector, in f64.
    pub fn shifted(&self, i: usize) -> [f64; 3] {
        let p = self.points[i];
        match &self.offsets {
            Some(o) => {
                let o = o[i];
                [
                    p.x as f64 + o[0] as f64,
                    p.y as f64 + o[1] as f64,
                    p.z as f64 + o[2] as f64,
                ]
            }
            None => p.to_f64(),
        }
    }

    /// Keeps the points at `indices` (in the given order), carrying every
    /// annotation along.
    pub fn select(&self, indices: &[u32]) -> LabeledCloud {
        fn pick<T: Copy>(v: &Option<Vec<T>>, idx: &[u32]) -> Option<Vec<T>> {
            v.as_ref().map(|v| idx.iter().map(|&i| v[i as usize]).collect())
        }
        LabeledCloud {
            points: indices.iter().map(|&i| self.points[i as usize]).collect(),
            colors: pick(&self.colors, indices),
            labels: pick(&self.labels, indices),
            offsets: pick(&self.offsets, indices),
            instance_ids: pick(&self.instance_ids, indices),
            class_table: self.class_table.clone(),
        }
    }

    pub(crate) fn replace_labels_and_offsets(&mut self, labels: Vec<u16>, offsets: Vec<[f32; 3]>) {
        debug_assert_eq!(labels.len(), self.points.len());
        debug_assert_eq!(offsets.len(), self.points.len());
        self.labels = Some(labels);
        self.offsets = Some(offsets);
    }
}

/// A ground-truth instance: its id, class and sorted member indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtInstance {
    pub id: i32,
    pub class_id: u16,
    pub point_indices: Vec<u32>,
}

/// Per-point ground-truth instance ids plus the class of each instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthInstances {
    instance_ids: Vec<i32>,
    classes: BTreeMap<i32, u16>,
}

impl GroundTruthInstances {
    pub fn new(instance_ids: Vec<i32>, classes: BTreeMap<i32, u16>) -> Result<Self, CloudError> {
        let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
        for &id in &instance_ids {
            if id == NO_INSTANCE {
                continue;
            }
            if id < 0 {
                return Err(CloudError::Invalid(format!("negative instance id {id}")));
            }
            *counts.entry(id).or_default() += 1;
        }
        for id in counts.keys() {
            if !classes.contains_key(id) {
                return Err(CloudError::Invalid(format!("instance {id} has no class")));
            }
        }
        for id in classes.keys() {
            if !counts.contains_key(id) {
                return Err(CloudError::Invalid(format!("instance {id} has no points")));
            }
        }
        Ok(GroundTruthInstances { instance_ids, classes })
    }

    /// Reads instance ids and classes off a cloud. Every point of an instance
    /// must carry the same semantic label.
    pub fn from_cloud(cloud: &LabeledCloud) -> Result<Self, CloudError> {
        let ids = cloud.instance_ids().ok_or(CloudError::Unlabeled("ground-truth instance ids"))?;
        let labels = cloud.require_labels()?;
        let mut classes: BTreeMap<i32, u16> = BTreeMap::new();
        for (i, (&id, &label)) in ids.iter().zip(labels).enumerate() {
            if id == NO_INSTANCE {
                continue;
            }
            match classes.get(&id) {
                Some(&c) if c != label => {
                    return Err(CloudError::Invalid(format!(
                        "instance {id} mixes classes {c} and {label} (point {i})"
                    )))
                }
                Some(_) => {}
                None => {
                    classes.insert(id, label);
                }
            }
        }
        GroundTruthInstances::new(ids.to_vec(), classes)
    }

    pub fn instance_ids(&self) -> &[i32] {
        &self.instance_ids
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, id: i32) -> Option<u16> {
        self.classes.get(&id).copied()
    }

    /// All instances ordered by id.
    pub fn instances(&self) -> Vec<GtInstance> {
        let mut members: BTreeMap<i32, Vec<u32>> = BTreeMap::new();
        for (i, &id) in self.instance_ids.iter().enumerate() {
            if id != NO_INSTANCE {
                members.entry(id).or_default().push(i as u32);
            }
        }
        members
            .into_iter()
            .map(|(id, point_indices)| GtInstance { id, class_id: self.classes[&id], point_indices })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    Ply,
    Hlc1,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self, CloudError> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "ply" => Ok(CloudFormat::Ply),
            Some(e) if e == "hlc1" || e == "hlc" => Ok(CloudFormat::Hlc1),
            _ => Err(CloudError::UnsupportedFormat(path.display().to_string())),
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<LabeledCloud, CloudError> {
    let bytes = std::fs::read(path)?;
    match format {
        CloudFormat::Hlc1 => hlc1::decode(&bytes),
        CloudFormat::Ply => ply::decode(&bytes),
    }
}

pub fn save_cloud(cloud: &LabeledCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<(), CloudError> {
    let bytes = match format {
        CloudFormat::Hlc1 => hlc1::encode(cloud),
        CloudFormat::Ply => ply::encode(cloud, ply::PlyEncoding::BinaryLittleEndian),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// [`load_cloud`] with the format picked from the file extension.
pub fn load_cloud_auto(path: impl AsRef<Path>) -> Result<LabeledCloud, CloudError> {
    let path = path.as_ref();
    load_cloud(path, CloudFormat::from_path(path)?)
}

pub fn save_cloud_auto(cloud: &LabeledCloud, path: impl AsRef<Path>) -> Result<(), CloudError> {
    let path = path.as_ref();
    save_cloud(cloud, path, CloudFormat::from_path(path)?)
}
