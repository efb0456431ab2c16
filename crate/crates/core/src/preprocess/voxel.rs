use std::collections::HashMap;

use crate::cloudio::LabeledCloud;

pub type VoxelKey = [i32; 3];

/// `floor(p / size)` per axis.
#[inline]
pub fn voxel_of(p: [f64; 3], size: f64) -> VoxelKey {
    [(p[0] / size).floor() as i32, (p[1] / size).floor() as i32, (p[2] / size).floor() as i32]
}

/// A voxel hash over a set of positions.
///
/// Point indices are stored contiguously per voxel, voxels in ascending key
/// order, so iteration never depends on hash-map order.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    size: f64,
    keys: Vec<VoxelKey>,
    order: Vec<u32>,
    cells: Vec<(VoxelKey, u32, u32)>,
    lookup: HashMap<VoxelKey, u32>,
}

impl VoxelGrid {
    pub fn build(positions: &[[f64; 3]], size: f64) -> Self {
        assert!(size > 0.0, "voxel size must be positive");
        let keys: Vec<VoxelKey> = positions.iter().map(|&p| voxel_of(p, size)).collect();
        let mut order: Vec<u32> = (0..positions.len() as u32).collect();
        order.sort_unstable_by_key(|&i| (keys[i as usize], i));
        let mut cells: Vec<(VoxelKey, u32, u32)> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let k = keys[i as usize];
            match cells.last_mut() {
                Some(last) if last.0 == k => last.2 = pos as u32 + 1,
                _ => cells.push((k, pos as u32, pos as u32 + 1)),
            }
        }
        let lookup = cells.iter().enumerate().map(|(c, cell)| (cell.0, c as u32)).collect();
        VoxelGrid { size, keys, order, cells, lookup }
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn key(&self, i: usize) -> VoxelKey {
        self.keys[i]
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_key(&self, c: usize) -> VoxelKey {
        self.cells[c].0
    }

    pub fn cell_members(&self, c: usize) -> &[u32] {
        let (_, s, e) = self.cells[c];
        &self.order[s as usize..e as usize]
    }

    pub fn cell_index(&self, key: &VoxelKey) -> Option<usize> {
        self.lookup.get(key).map(|&c| c as usize)
    }

    pub fn members(&self, key: &VoxelKey) -> &[u32] {
        self.cell_index(key).map(|c| self.cell_members(c)).unwrap_or(&[])
    }

    /// Inclusive min / max voxel key over all occupied voxels.
    pub fn key_bounds(&self) -> Option<(VoxelKey, VoxelKey)> {
        let first = self.cells.first()?.0;
        let mut lo = first;
        let mut hi = first;
        for (k, _, _) in &self.cells {
            for a in 0..3 {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
        }
        Some((lo, hi))
    }
}

/// A cloud plus its voxel partition.
#[derive(Debug, Clone)]
pub struct VoxelIndexCloud<'a> {
    cloud: &'a LabeledCloud,
    grid: VoxelGrid,
}

impl<'a> VoxelIndexCloud<'a> {
    pub fn cloud(&self) -> &'a LabeledCloud {
        self.cloud
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn voxel_size(&self) -> f64 {
        self.grid.size
    }

    pub fn voxel_of_point(&self, i: usize) -> VoxelKey {
        self.grid.key(i)
    }

    /// Indices of the points in voxel `key`, ascending; empty if unoccupied.
    pub fn lookup(&self, key: &VoxelKey) -> &[u32] {
        self.grid.members(key)
    }

    pub fn buckets(&self) -> impl Iterator<Item = (VoxelKey, &[u32])> {
        (0..self.grid.cell_count()).map(|c| (self.grid.cell_key(c), self.grid.cell_members(c)))
    }
}

pub fn voxelize(cloud: &LabeledCloud, voxel_size: f64) -> VoxelIndexCloud<'_> {
    let positions: Vec<[f64; 3]> = cloud.points().iter().map(|p| p.to_f64()).collect();
    VoxelIndexCloud { cloud, grid: VoxelGrid::build(&positions, voxel_size) }
}
