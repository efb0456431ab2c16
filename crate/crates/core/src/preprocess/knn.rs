//! Exact k-nearest-neighbor distances over a voxel hash.
//!
//! Each query walks voxel shells of growing Chebyshev radius around its own
//! voxel and stops once the k-th best distance cannot be beaten by any point
//! in an unvisited shell. When a shell would touch more voxels than are
//! occupied the remaining voxels are scanned directly, which bounds the cost
//! of isolated points far from everything else.

use rayon::prelude::*;

use super::voxel::{VoxelGrid, VoxelKey};

#[inline]
pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Voxel edge sized so a voxel holds on the order of `k` points, for both
/// volumetric and surface-like clouds. Affects speed only, never results.
fn cell_size_for(points: &[[f64; 3]], k: usize) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    ext.sort_by(f64::total_cmp);
    if ext[2] <= 0.0 {
        return 1.0;
    }
    let ratio = k as f64 / points.len() as f64;
    let vol = (ext[0] * ext[1] * ext[2] * ratio).cbrt();
    let area = (ext[1] * ext[2] * ratio).sqrt();
    let line = ext[2] * ratio;
    (vol.max(area).max(line) * 0.5).max(1e-6)
}

struct Best {
    k: usize,
    d: Vec<f64>,
}

impl Best {
    #[inline]
    fn offer(&mut self, v: f64) {
        if self.d.len() == self.k {
            if v >= self.d[self.k - 1] {
                return;
            }
            self.d.pop();
        }
        let at = self.d.partition_point(|&x| x <= v);
        self.d.insert(at, v);
    }

    fn worst(&self) -> Option<f64> {
        (self.d.len() == self.k).then(|| self.d[self.k - 1])
    }
}

fn scan(best: &mut Best, members: &[u32], positions: &[[f64; 3]], q: usize) {
    let p = positions[q];
    for &j in members {
        if j as usize != q {
            best.offer(dist(p, positions[j as usize]));
        }
    }
}

fn chebyshev(a: VoxelKey, b: VoxelKey) -> i32 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs()).max((a[2] - b[2]).abs())
}

fn query(grid: &VoxelGrid, bounds: (VoxelKey, VoxelKey), positions: &[[f64; 3]], q: usize, k: usize) -> Vec<f64> {
    let (lo, hi) = bounds;
    let c = grid.key(q);
    let max_shell = (0..3).map(|a| (c[a] - lo[a]).max(hi[a] - c[a])).max().unwrap_or(0);
    let occupied = grid.cell_count() as i64;
    let mut best = Best { k, d: Vec::with_capacity(k + 1) };
    let cell = grid.size();

    for s in 0..=max_shell {
        let surface: i64 = if s == 0 { 1 } else { (2 * s as i64 + 1).pow(3) - (2 * s as i64 - 1).pow(3) };
        if surface > occupied {
            for ci in 0..grid.cell_count() {
                if chebyshev(grid.cell_key(ci), c) >= s {
                    scan(&mut best, grid.cell_members(ci), positions, q);
                }
            }
            break;
        }
        for dx in -s..=s {
            let x = c[0] + dx;
            if x < lo[0] || x > hi[0] {
                continue;
            }
            for dy in -s..=s {
                let y = c[1] + dy;
                if y < lo[1] || y > hi[1] {
                    continue;
                }
                let on_face = dx.abs() == s || dy.abs() == s;
                let mut visit = |dz: i32| {
                    let z = c[2] + dz;
                    if z >= lo[2] && z <= hi[2] {
                        scan(&mut best, grid.members(&[x, y, z]), positions, q);
                    }
                };
                if on_face {
                    for dz in -s..=s {
                        visit(dz);
                    }
                } else if s > 0 {
                    visit(-s);
                    visit(s);
                } else {
                    visit(0);
                }
            }
        }
        // every unvisited point is farther than s * cell
        if let Some(w) = best.worst() {
            if w <= s as f64 * cell * (1.0 - 1e-9) {
                break;
            }
        }
    }
    best.d
}

/// For every point, its `k` nearest-neighbor distances in ascending order,
/// flattened to `n * k` values. Requires `points.len() > k`.
pub fn knn_distances(points: &[[f64; 3]], k: usize) -> Vec<f64> {
    assert!(k >= 1 && points.len() > k, "need more than k points");
    let grid = VoxelGrid::build(points, cell_size_for(points, k));
    let bounds = grid.key_bounds().expect("non-empty grid");
    let per_point: Vec<Vec<f64>> = (0..points.len())
        .into_par_iter()
        .map(|q| query(&grid, bounds, points, q, k))
        .collect();
    let mut out = Vec::with_capacity(points.len() * k);
    for d in per_point {
        debug_assert_eq!(d.len(), k);
        out.extend(d);
    }
    out
}

/// Mean of each point's `k` nearest-neighbor distances, summed in ascending
/// order.
pub fn knn_mean_distances(points: &[[f64; 3]], k: usize) -> Vec<f64> {
    knn_distances(points, k)
        .chunks_exact(k)
        .map(|d| d.iter().sum::<f64>() / k as f64)
        .collect()
}
