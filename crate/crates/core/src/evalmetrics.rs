//! Instance-segmentation average precision.
//!
//! Predictions are matched greedily in rank order to same-class ground-truth
//! instances by point-set IoU; AP is the area under the all-points
//! interpolated precision-recall curve. mAP averages each class over the IoU
//! thresholds 0.50, 0.55, ..., 0.95 and then over classes that have ground
//! truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloudio::{ClassTable, GroundTruthInstances, GtInstance, NO_INSTANCE};
use crate::grouping::{rank_order, InstancePrediction};

/// mAP thresholds in basis points.
pub const MAP_THRESHOLDS_BP: [u32; 10] = [5000, 5500, 6000, 6500, 7000, 7500, 8000, 8500, 9000, 9500];
pub const AP25_BP: u32 = 2500;
pub const AP50_BP: u32 = 5000;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty ground truth")]
    EmptyGroundTruth,
    #[error("prediction references point {index} but ground truth covers {len} points")]
    Misaligned { index: u32, len: usize },
    #[error("iou threshold {0} outside [0, 1]")]
    Threshold(f64),
}

pub fn map_thresholds() -> [f64; 10] {
    MAP_THRESHOLDS_BP.map(bp_to_f64)
}

fn bp_to_f64(bp: u32) -> f64 {
    bp as f64 / 10_000.0
}

fn to_bp(threshold: f64) -> Result<u32, EvalError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(EvalError::Threshold(threshold));
    }
    Ok((threshold * 10_000.0).round() as u32)
}

/// `inter / union >= bp / 10000`, evaluated in integers.
#[inline]
fn passes(inter: usize, union: usize, bp: u32) -> bool {
    inter > 0 && inter as u64 * 10_000 >= bp as u64 * union as u64
}

/// One class's ranked predictions with their overlap against every GT
/// instance of that class.
struct ClassCase {
    pred_sizes: Vec<usize>,
    gt_sizes: Vec<usize>,
    /// `inter[p][g]`, predictions in rank order.
    inter: Vec<Vec<usize>>,
}

impl ClassCase {
    fn build(ranked: &[&InstancePrediction], gts: &[&GtInstance], instance_ids: &[i32]) -> Self {
        let slot: BTreeMap<i32, usize> = gts.iter().enumerate().map(|(k, g)| (g.id, k)).collect();
        let inter = ranked
            .iter()
            .map(|p| {
                let mut row = vec![0usize; gts.len()];
                for &i in &p.point_indices {
                    let id = instance_ids[i as usize];
                    if id != NO_INSTANCE {
                        if let Some(&k) = slot.get(&id) {
                            row[k] += 1;
                        }
                    }
                }
                row
            })
            .collect();
        ClassCase {
            pred_sizes: ranked.iter().map(|p| p.point_indices.len()).collect(),
            gt_sizes: gts.iter().map(|g| g.point_indices.len()).collect(),
            inter,
        }
    }

    fn ap(&self, bp: u32) -> f64 {
        let mut matched = vec![false; self.gt_sizes.len()];
        let mut tp = Vec::with_capacity(self.pred_sizes.len());
        for (p, row) in self.inter.iter().enumerate() {
            let mut best: Option<(usize, usize, usize)> = None; // (gt, inter, union)
            for (g, &inter) in row.iter().enumerate() {
                if matched[g] {
                    continue;
                }
                let union = self.pred_sizes[p] + self.gt_sizes[g] - inter;
                if !passes(inter, union, bp) {
                    continue;
                }
                // larger IoU wins, compared exactly by cross-multiplication
                let better = match best {
                    None => true,
                    Some((_, bi, bu)) => (inter as u128) * (bu as u128) > (bi as u128) * (union as u128),
                };
                if better {
                    best = Some((g, inter, union));
                }
            }
            if let Some((g, _, _)) = best {
                matched[g] = true;
            }
            tp.push(best.is_some());
        }
        average_precision(&tp, self.gt_sizes.len())
    }
}

/// All-points interpolated AP of a ranked true/false-positive sequence.
pub fn average_precision(tp: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (k, &t) in tp.iter().enumerate() {
        if t {
            hits += 1;
        }
        precision.push(hits as f64 / (k + 1) as f64);
        recall.push(hits as f64 / n_gt as f64);
    }
    // running max from the right gives the interpolated precision
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for k in 0..tp.len() {
        if tp[k] {
            ap += (recall[k] - prev_recall) * precision[k];
            prev_recall = recall[k];
        }
    }
    ap
}

fn ranked(predictions: &[InstancePrediction], class_id: u16) -> Vec<&InstancePrediction> {
    let mut v: Vec<&InstancePrediction> = predictions.iter().filter(|p| p.class_id == class_id).collect();
    v.sort_by(|a, b| rank_order(a.score, &a.point_indices, b.score, &b.point_indices));
    v
}

fn check_alignment(predictions: &[InstancePrediction], gt: &GroundTruthInstances) -> Result<(), EvalError> {
    let len = gt.instance_ids().len();
    for p in predictions {
        if let Some(&index) = p.point_indices.iter().find(|&&i| i as usize >= len) {
            return Err(EvalError::Misaligned { index, len });
        }
    }
    Ok(())
}

/// AP of one class at one IoU threshold, or `None` when the class has no
/// ground-truth instance (such classes are left out of every mean).
pub fn match_and_ap(
    predictions: &[InstancePrediction],
    gt: &GroundTruthInstances,
    iou_threshold: f64,
    class_id: u16,
) -> Result<Option<f64>, EvalError> {
    let bp = to_bp(iou_threshold)?;
    check_alignment(predictions, gt)?;
    let all = gt.instances();
    let gts: Vec<&GtInstance> = all.iter().filter(|g| g.class_id == class_id).collect();
    if gts.is_empty() {
        return Ok(None);
    }
    let case = ClassCase::build(&ranked(predictions, class_id), &gts, gt.instance_ids());
    Ok(Some(case.ap(bp)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: String,
    pub class_id: u16,
    pub gt_instances: usize,
    pub predictions: usize,
    /// AP at each of the ten mAP thresholds.
    pub ap_by_threshold: Vec<f64>,
    pub ap25: f64,
    pub ap50: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    pub thresholds: Vec<f64>,
    pub classes: Vec<ClassAp>,
    pub ap25: f64,
    pub ap50: f64,
    pub map: f64,
}

impl ApResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Per-class AP table plus AP25, AP50 and mAP over classes with ground truth.
pub fn evaluate(
    predictions: &[InstancePrediction],
    gt: &GroundTruthInstances,
    class_table: &ClassTable,
) -> Result<ApResult, EvalError> {
    check_alignment(predictions, gt)?;
    let all = gt.instances();
    let mut by_class: BTreeMap<u16, Vec<&GtInstance>> = BTreeMap::new();
    for g in &all {
        by_class.entry(g.class_id).or_default().push(g);
    }
    if by_class.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let classes: Vec<ClassAp> = by_class
        .iter()
        .map(|(&class_id, gts)| {
            let r = ranked(predictions, class_id);
            let case = ClassCase::build(&r, gts, gt.instance_ids());
            let ap_by_threshold: Vec<f64> = MAP_THRESHOLDS_BP.iter().map(|&bp| case.ap(bp)).collect();
            ClassAp {
                class: class_table.name(class_id).to_string(),
                class_id,
                gt_instances: gts.len(),
                predictions: r.len(),
                ap25: case.ap(AP25_BP),
                ap50: case.ap(AP50_BP),
                map: mean(ap_by_threshold.iter().copied()),
                ap_by_threshold,
            }
        })
        .collect();
    Ok(ApResult {
        thresholds: map_thresholds().to_vec(),
        ap25: mean(classes.iter().map(|c| c.ap25)),
        ap50: mean(classes.iter().map(|c| c.ap50)),
        map: mean(classes.iter().map(|c| c.map)),
        classes,
    })
}
