use std::collections::BTreeMap;

use super::{ClusterConfig, ClusterProposal, ScoreMode};
use crate::cloudio::LabeledCloud;

/// Share of the proposal's shifted points lying within `radius` of their own
/// centroid.
pub fn centroid_compactness(cloud: &LabeledCloud, proposal: &ClusterProposal, radius: f64) -> f64 {
    let n = proposal.point_indices.len();
    if n == 0 {
        return 0.0;
    }
    let mut c = [0.0f64; 3];
    for &i in &proposal.point_indices {
        let s = cloud.shifted(i as usize);
        for k in 0..3 {
            c[k] += s[k];
        }
    }
    let c = c.map(|v| v / n as f64);
    let r2 = radius * radius;
    let inside = proposal
        .point_indices
        .iter()
        .filter(|&&i| {
            let s = cloud.shifted(i as usize);
            let d2: f64 = (0..3).map(|k| (s[k] - c[k]) * (s[k] - c[k])).sum();
            d2 <= r2
        })
        .count();
    inside as f64 / n as f64
}

fn median(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Score of one proposal; `peers` (all proposals of the scene) supply the
/// per-class median size in size-normalized mode.
pub fn score_proposal(cloud: &LabeledCloud, proposal: &ClusterProposal, peers: &[ClusterProposal], cfg: &ClusterConfig) -> f64 {
    match cfg.score_mode {
        ScoreMode::CentroidCompactness => centroid_compactness(cloud, proposal, cfg.radius),
        ScoreMode::SizeNormalized => {
            let mut sizes: Vec<usize> = peers
                .iter()
                .filter(|p| p.class_id == proposal.class_id)
                .map(|p| p.point_indices.len())
                .collect();
            if sizes.is_empty() {
                return 1.0;
            }
            sizes.sort_unstable();
            (proposal.point_indices.len() as f64 / median(&sizes)).min(1.0)
        }
    }
}

/// Scores every proposal in place.
pub fn score_proposals(cloud: &LabeledCloud, proposals: &mut [ClusterProposal], cfg: &ClusterConfig) {
    match cfg.score_mode {
        ScoreMode::CentroidCompactness => {
            for p in proposals.iter_mut() {
                p.score = centroid_compactness(cloud, p, cfg.radius);
            }
        }
        ScoreMode::SizeNormalized => {
            let mut by_class: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
            for p in proposals.iter() {
                by_class.entry(p.class_id).or_default().push(p.point_indices.len());
            }
            let medians: BTreeMap<u16, f64> = by_class
                .into_iter()
                .map(|(c, mut s)| {
                    s.sort_unstable();
                    (c, median(&s))
                })
                .collect();
            for p in proposals.iter_mut() {
                p.score = (p.point_indices.len() as f64 / medians[&p.class_id]).min(1.0);
            }
        }
    }
}
