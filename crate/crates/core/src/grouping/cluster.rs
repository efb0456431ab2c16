//! Same-label radius clustering.
//!
//! Points are bucketed per label into cells small enough that any two points
//! sharing a cell are within the radius, so each cell is unioned wholesale.
//! Cells are then linked to neighbors in a Chebyshev shell that covers the
//! radius; a pair scan between two cells stops at the first close pair and
//! is skipped outright once both cells already share a component.

use std::collections::BTreeMap;

use super::{Branch, ClusterConfig, ClusterProposal, Coordinates, GroupingError};
use crate::cloudio::LabeledCloud;
use crate::preprocess::VoxelGrid;

pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

#[inline]
fn within(a: [f64; 3], b: [f64; 3], r2: f64) -> bool {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz <= r2
}

/// Cell edge and shell width used for a clustering radius.
///
/// The edge never exceeds `radius / 2`, keeping a cell's diagonal at most
/// `0.87 * radius`; the shell `floor(radius / edge) + 1` reaches every cell
/// that can hold a point within `radius`.
pub fn cell_and_shell(cfg: &ClusterConfig) -> (f64, i32) {
    let cell = cfg.voxel_size.min(cfg.radius * 0.5 * (1.0 + 1e-9));
    let shell = (cfg.radius / cell).floor() as i32 + 1;
    (cell, shell)
}

fn components(positions: &[[f64; 3]], cfg: &ClusterConfig) -> Vec<Vec<u32>> {
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    let (cell, shell) = cell_and_shell(cfg);
    let r2 = cfg.radius * cfg.radius;
    let grid = VoxelGrid::build(positions, cell);
    let cells = grid.cell_count();

    // each cell is a clique
    let mut uf = UnionFind::new(n);
    let mut bbox: Vec<([f64; 3], [f64; 3])> = Vec::with_capacity(cells);
    for c in 0..cells {
        let m = grid.cell_members(c);
        let first = m[0];
        let mut lo = positions[first as usize];
        let mut hi = lo;
        for &i in &m[1..] {
            uf.union(first, i);
            let p = positions[i as usize];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        bbox.push((lo, hi));
    }

    let box_gap2 = |a: &([f64; 3], [f64; 3]), b: &([f64; 3], [f64; 3])| -> f64 {
        (0..3)
            .map(|k| {
                let d = (a.0[k] - b.1[k]).max(b.0[k] - a.1[k]).max(0.0);
                d * d
            })
            .sum()
    };

    for c in 0..cells {
        let key = grid.cell_key(c);
        let a_members = grid.cell_members(c);
        for dx in -shell..=shell {
            for dy in -shell..=shell {
                for dz in -shell..=shell {
                    // visit each unordered cell pair once
                    if (dx, dy, dz) <= (0, 0, 0) {
                        continue;
                    }
                    let nk = [key[0] + dx, key[1] + dy, key[2] + dz];
                    let Some(nc) = grid.cell_index(&nk) else { continue };
                    let b_members = grid.cell_members(nc);
                    if uf.find(a_members[0]) == uf.find(b_members[0]) {
                        continue;
                    }
                    if box_gap2(&bbox[c], &bbox[nc]) > r2 {
                        continue;
                    }
                    'pairs: for &i in a_members {
                        let p = positions[i as usize];
                        for &j in b_members {
                            if within(p, positions[j as usize], r2) {
                                uf.union(i, j);
                                break 'pairs;
                            }
                        }
                    }
                }
            }
        }
    }

    let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for i in 0..n as u32 {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Connected components of same-label points under the radius graph, in the
/// chosen coordinates. Background classes are skipped and components smaller
/// than `min_points` are discarded. Proposals come back ordered by their
/// smallest member index and carry a zero score.
pub fn cluster_branch(
    cloud: &LabeledCloud,
    coordinates: Coordinates,
    cfg: &ClusterConfig,
) -> Result<Vec<ClusterProposal>, GroupingError> {
    cfg.validate()?;
    let labels = cloud.labels().ok_or(GroupingError::Unlabeled("semantic labels"))?;
    if coordinates == Coordinates::Shifted && cloud.offsets().is_none() {
        return Err(GroupingError::Unlabeled("offset vectors"));
    }
    let table = cloud.class_table();
    let mut by_label: BTreeMap<u16, Vec<u32>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if !table.is_background(l) {
            by_label.entry(l).or_default().push(i as u32);
        }
    }
    let branch = match coordinates {
        Coordinates::Original => Branch::Semantic,
        Coordinates::Shifted => Branch::Offset,
    };

    let mut out = Vec::new();
    for (class_id, members) in by_label {
        let positions: Vec<[f64; 3]> = members
            .iter()
            .map(|&i| match coordinates {
                Coordinates::Original => cloud.points()[i as usize].to_f64(),
                Coordinates::Shifted => cloud.shifted(i as usize),
            })
            .collect();
        for comp in components(&positions, cfg) {
            if comp.len() < cfg.min_points {
                continue;
            }
            // local indices ascend within a component and members ascend globally
            let point_indices: Vec<u32> = comp.iter().map(|&l| members[l as usize]).collect();
            out.push(ClusterProposal { point_indices, class_id, branch, score: 0.0 });
        }
    }
    out.sort_by_key(|p| p.point_indices[0]);
    Ok(out)
}
