use std::cmp::Ordering;

use super::{ClusterProposal, InstancePrediction};

/// |A ∩ B| for two ascending index sets.
pub fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Point-set IoU of two ascending index sets.
pub fn point_iou(a: &[u32], b: &[u32]) -> f64 {
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Ranking used by NMS and evaluation: higher score first, then larger
/// set, then lower smallest index.
pub fn rank_order(score_a: f64, a: &[u32], score_b: f64, b: &[u32]) -> Ordering {
    score_b
        .total_cmp(&score_a)
        .then(b.len().cmp(&a.len()))
        .then(a.first().cmp(&b.first()))
}

/// Greedy suppression: walk proposals best-first and drop any whose IoU with
/// an already kept prediction is at least `nms_iou`.
pub fn nms(proposals: &[ClusterProposal], nms_iou: f64) -> Vec<InstancePrediction> {
    let mut order: Vec<&ClusterProposal> = proposals.iter().filter(|p| !p.point_indices.is_empty()).collect();
    order.sort_by(|a, b| rank_order(a.score, &a.point_indices, b.score, &b.point_indices));
    let mut kept: Vec<InstancePrediction> = Vec::new();
    for p in order {
        if kept.iter().all(|k| point_iou(&k.point_indices, &p.point_indices) < nms_iou) {
            kept.push(InstancePrediction {
                point_indices: p.point_indices.clone(),
                class_id: p.class_id,
                score: p.score,
            });
        }
    }
    kept
}
