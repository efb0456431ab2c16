//! From per-point labels and offsets to scored instance predictions.
//!
//! Two clustering passes feed one NMS funnel: a semantic pass over the
//! original coordinates and an offset pass over `point + offset`, where
//! points of one object collapse toward its centroid. Proposals are scored by
//! how tightly their shifted points gather (a stand-in for a learned scorer)
//! and overlapping ones are suppressed greedily.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloudio::{ClassTable, LabeledCloud};

mod cluster;
mod nms;
mod score;

pub use cluster::{cell_and_shell, cluster_branch};
pub use nms::{intersection_size, nms, point_iou, rank_order};
pub use score::{centroid_compactness, score_proposal, score_proposals};

pub const DEFAULT_RADIUS: f64 = 0.03;
pub const DEFAULT_MIN_POINTS: usize = 50;
pub const DEFAULT_NMS_IOU: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum GroupingError {
    #[error("cloud is unlabeled (needs {0})")]
    Unlabeled(&'static str),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("prediction references point {index} but the cloud has {len} points")]
    IndexOutOfRange { index: u32, len: usize },
    #[error("unknown class {0:?}")]
    UnknownClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    CentroidCompactness,
    SizeNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    Original,
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Semantic,
    Offset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub radius: f64,
    pub min_points: usize,
    pub nms_iou: f64,
    pub score_mode: ScoreMode,
    /// Upper bound on the neighbor-search cell edge.
    pub voxel_size: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            radius: DEFAULT_RADIUS,
            min_points: DEFAULT_MIN_POINTS,
            nms_iou: DEFAULT_NMS_IOU,
            score_mode: ScoreMode::CentroidCompactness,
            voxel_size: crate::preprocess::DEFAULT_VOXEL_SIZE,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), GroupingError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GroupingError::Config("radius must be > 0".into()));
        }
        if self.min_points < 1 {
            return Err(GroupingError::Config("min_points must be >= 1".into()));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(GroupingError::Config("nms_iou must be in (0, 1]".into()));
        }
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(GroupingError::Config("voxel_size must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProposal {
    pub point_indices: Vec<u32>,
    pub class_id: u16,
    pub branch: Branch,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePrediction {
    pub point_indices: Vec<u32>,
    pub class_id: u16,
    pub score: f64,
}

/// Wall-clock split of one segmentation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentTiming {
    /// Both clustering passes.
    pub cluster: f64,
    /// Scoring plus NMS.
    pub score_nms: f64,
}

pub fn segment_instances(cloud: &LabeledCloud, cfg: &ClusterConfig) -> Result<Vec<InstancePrediction>, GroupingError> {
    segment_instances_timed(cloud, cfg).map(|(p, _)| p)
}

pub fn segment_instances_timed(
    cloud: &LabeledCloud,
    cfg: &ClusterConfig,
) -> Result<(Vec<InstancePrediction>, SegmentTiming), GroupingError> {
    cfg.validate()?;
    if cloud.offsets().is_none() {
        return Err(GroupingError::Unlabeled("offset vectors"));
    }
    let t0 = Instant::now();
    let (semantic, offset) = rayon::join(
        || cluster_branch(cloud, Coordinates::Original, cfg),
        || cluster_branch(cloud, Coordinates::Shifted, cfg),
    );
    let mut proposals = semantic?;
    proposals.extend(offset?);
    let t1 = Instant::now();
    score_proposals(cloud, &mut proposals, cfg);
    let predictions = nms(&proposals, cfg.nms_iou);
    let t2 = Instant::now();
    Ok((
        predictions,
        SegmentTiming { cluster: (t1 - t0).as_secs_f64(), score_nms: (t2 - t1).as_secs_f64() },
    ))
}

/// One entry of `instances.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub class: String,
    pub score: f64,
    pub point_indices: Vec<u32>,
}

/// Serializes predictions as the `instances.json` array, best first.
pub fn instances_to_json(predictions: &[InstancePrediction], table: &ClassTable) -> String {
    let mut sorted: Vec<&InstancePrediction> = predictions.iter().collect();
    sorted.sort_by(|a, b| rank_order(a.score, &a.point_indices, b.score, &b.point_indices));
    let records: Vec<InstanceRecord> = sorted
        .into_iter()
        .map(|p| InstanceRecord {
            class: table.name(p.class_id).to_string(),
            score: p.score,
            point_indices: p.point_indices.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("records serialize") + "\n"
}

/// Parses `instances.json`, resolving class names against `table` and
/// checking indices against a cloud of `len` points.
pub fn instances_from_json(json: &str, table: &ClassTable, len: usize) -> Result<Vec<InstancePrediction>, crate::Error> {
    let records: Vec<InstanceRecord> = serde_json::from_str(json)?;
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let class_id = table.id_of(&r.class).ok_or_else(|| GroupingError::UnknownClass(r.class.clone()))?;
        let mut idx = r.point_indices;
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i as usize >= len) {
            return Err(GroupingError::IndexOutOfRange { index: bad, len }.into());
        }
        if idx.is_empty() {
            return Err(crate::Error::Invalid("prediction with no points".into()));
        }
        out.push(InstancePrediction { point_indices: idx, class_id, score: r.score });
    }
    Ok(out)
}
