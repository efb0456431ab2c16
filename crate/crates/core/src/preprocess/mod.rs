//! Point-cap downsampling, statistical outlier removal and voxelization.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloudio::LabeledCloud;

pub mod knn;
pub mod voxel;

pub use knn::{knn_distances, knn_mean_distances};
pub use voxel::{voxel_of, voxelize, VoxelGrid, VoxelIndexCloud, VoxelKey};

/// Largest cloud handed to segmentation.
pub const DEFAULT_MAX_POINTS: usize = 200_000;
/// Voxel edge (m) used for clustering.
pub const DEFAULT_VOXEL_SIZE: f64 = 0.02;
pub const DEFAULT_OUTLIER_K: usize = 16;
pub const DEFAULT_OUTLIER_SIGMA: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("cloud too small for outlier filter ({points} points, k = {k})")]
    TooSmall { points: usize, k: usize },
    #[error("invalid config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub max_points: usize,
    pub outlier_k: usize,
    pub outlier_sigma: f64,
    pub voxel_size: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            max_points: DEFAULT_MAX_POINTS,
            outlier_k: DEFAULT_OUTLIER_K,
            outlier_sigma: DEFAULT_OUTLIER_SIGMA,
            voxel_size: DEFAULT_VOXEL_SIZE,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.max_points < 1 {
            return Err(PreprocessError::Config("max_points must be >= 1".into()));
        }
        if self.outlier_k < 1 {
            return Err(PreprocessError::Config("outlier_k must be >= 1".into()));
        }
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(PreprocessError::Config("voxel_size must be > 0".into()));
        }
        if !(self.outlier_sigma.is_finite() && self.outlier_sigma >= 0.0) {
            return Err(PreprocessError::Config("outlier_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Indices kept when thinning `n` points to at most `max_points`:
/// `round(i * n / m)` for `i in 0..m`.
pub fn downsample_indices(n: usize, max_points: usize) -> Vec<u32> {
    if n <= max_points {
        return (0..n as u32).collect();
    }
    let (n, m) = (n as u128, max_points as u128);
    // round half up: floor((2 i n + m) / 2m)
    (0..m).map(|i| ((2 * i * n + m) / (2 * m)) as u32).collect()
}

pub fn downsample_even(cloud: &LabeledCloud, max_points: usize) -> LabeledCloud {
    if cloud.len() <= max_points {
        return cloud.clone();
    }
    cloud.select(&downsample_indices(cloud.len(), max_points))
}

/// Statistical outlier removal. A point is dropped when the mean distance to
/// its `k` nearest neighbors exceeds `mean + sigma * std` of that quantity
/// over the whole cloud. Returns the surviving cloud and the removed indices.
pub fn remove_outliers(
    cloud: &LabeledCloud,
    k: usize,
    sigma: f64,
) -> Result<(LabeledCloud, Vec<u32>), PreprocessError> {
    if k < 1 {
        return Err(PreprocessError::Config("outlier_k must be >= 1".into()));
    }
    if cloud.len() <= k {
        return Err(PreprocessError::TooSmall { points: cloud.len(), k });
    }
    let positions: Vec<[f64; 3]> = cloud.points().iter().map(|p| p.to_f64()).collect();
    let mean_d = knn_mean_distances(&positions, k);
    let threshold = outlier_threshold(&mean_d, sigma);
    let (keep, removed): (Vec<u32>, Vec<u32>) = (0..cloud.len() as u32).partition(|&i| mean_d[i as usize] <= threshold);
    let out = if removed.is_empty() { cloud.clone() } else { cloud.select(&keep) };
    Ok((out, removed))
}

/// `mean + sigma * std` (population std), accumulated over the sorted values
/// so the result does not depend on point order.
pub fn outlier_threshold(mean_d: &[f64], sigma: f64) -> f64 {
    let mut sorted = mean_d.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let mut sq: Vec<f64> = sorted.iter().map(|d| (d - mean) * (d - mean)).collect();
    sq.sort_by(f64::total_cmp);
    let std = (sq.iter().sum::<f64>() / n).sqrt();
    mean + sigma * std
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub input_points: usize,
    pub kept_points: usize,
    pub removed_outliers: usize,
    pub seconds: f64,
}

/// Downsample to the point cap, then drop outliers.
pub fn preprocess(cloud: &LabeledCloud, cfg: &PreprocessConfig) -> Result<(LabeledCloud, PreprocessReport), PreprocessError> {
    cfg.validate()?;
    let start = Instant::now();
    let capped = downsample_even(cloud, cfg.max_points);
    let (out, removed) = remove_outliers(&capped, cfg.outlier_k, cfg.outlier_sigma)?;
    let report = PreprocessReport {
        input_points: cloud.len(),
        kept_points: out.len(),
        removed_outliers: removed.len(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((out, report))
}
