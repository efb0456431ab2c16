use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CloudError, GroundTruthInstances, LabeledCloud};

/// Noise model standing in for an imperfect segmentation network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Probability that a point's semantic label is replaced by another class.
    #[serde(default)]
    pub label_flip_rate: f64,
    /// Standard deviation (m) of Gaussian noise added to each offset component.
    #[serde(default)]
    pub offset_noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { label_flip_rate: 0.0, offset_noise_sigma: 0.0, rng_seed: 0 }
    }
}

impl OracleConfig {
    pub fn new(label_flip_rate: f64, offset_noise_sigma: f64, rng_seed: u64) -> Result<Self, CloudError> {
        let cfg = OracleConfig { label_flip_rate, offset_noise_sigma, rng_seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        if !(0.0..=1.0).contains(&self.label_flip_rate) {
            return Err(CloudError::Invalid(format!("label_flip_rate {} not in [0, 1]", self.label_flip_rate)));
        }
        if !(self.offset_noise_sigma >= 0.0 && self.offset_noise_sigma.is_finite()) {
            return Err(CloudError::Invalid(format!("offset_noise_sigma {} must be >= 0", self.offset_noise_sigma)));
        }
        Ok(())
    }
}

/// Produces "network" predictions from ground truth.
///
/// Each label is flipped with probability `label_flip_rate` to a uniformly
/// chosen different class; each offset component gets N(0, sigma) noise.
/// Ground-truth offsets are the cloud's own offsets when present, otherwise
/// `centroid(instance) - point` from `gt`. The output carries no instance ids.
pub fn oracle_predict(
    cloud: &LabeledCloud,
    gt: &GroundTruthInstances,
    cfg: &OracleConfig,
) -> Result<LabeledCloud, CloudError> {
    cfg.validate()?;
    let labels = cloud.require_labels()?;
    if gt.instance_ids().len() != cloud.len() {
        return Err(CloudError::Invalid(format!(
            "ground truth covers {} points, cloud has {}",
            gt.instance_ids().len(),
            cloud.len()
        )));
    }
    let truth_offsets: Vec<[f32; 3]> = match cloud.offsets() {
        Some(o) => o.to_vec(),
        None => gt_offsets(cloud, gt),
    };

    let classes = cloud.class_table().len() as u16;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let normal = Normal::new(0.0, cfg.offset_noise_sigma).expect("sigma validated");
    let mut out_labels = Vec::with_capacity(cloud.len());
    let mut out_offsets = Vec::with_capacity(cloud.len());
    for (&label, &offset) in labels.iter().zip(&truth_offsets) {
        let flip = rng.random_bool(cfg.label_flip_rate);
        let label = if flip && classes > 1 {
            let pick = rng.random_range(0..classes - 1);
            if pick >= label {
                pick + 1
            } else {
                pick
            }
        } else {
            label
        };
        out_labels.push(label);
        let offset = if cfg.offset_noise_sigma > 0.0 {
            offset.map(|v| (v as f64 + normal.sample(&mut rng)) as f32)
        } else {
            offset
        };
        out_offsets.push(offset);
    }
    let mut out = cloud.clone().without_instance_ids();
    out.replace_labels_and_offsets(out_labels, out_offsets);
    Ok(out)
}

fn gt_offsets(cloud: &LabeledCloud, gt: &GroundTruthInstances) -> Vec<[f32; 3]> {
    let mut offsets = vec![[0.0f32; 3]; cloud.len()];
    for inst in gt.instances() {
        let n = inst.point_indices.len() as f64;
        let mut c = [0.0f64; 3];
        for &i in &inst.point_indices {
            let p = cloud.points()[i as usize].to_f64();
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        let c = c.map(|v| v / n);
        for &i in &inst.point_indices {
            let p = cloud.points()[i as usize].to_f64();
            offsets[i as usize] = [(c[0] - p[0]) as f32, (c[1] - p[1]) as f32, (c[2] - p[2]) as f32];
        }
    }
    offsets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloudio::{ClassInfo, ClassTable, Point3};

    fn scene(n: usize, classes: usize) -> (LabeledCloud, GroundTruthInstances) {
        let table = ClassTable::new((0..classes).map(|i| ClassInfo::new(format!("c{i}"), false)).collect()).unwrap();
        let pts = (0..n).map(|i| Point3::new(i as f32 * 0.01, (i % 7) as f32, 0.0)).collect();
        let cloud = LabeledCloud::new(pts, table)
            .unwrap()
            .with_labels((0..n).map(|i| (i % classes) as u16).collect())
            .unwrap()
            .with_instance_ids((0..n).map(|i| (i % classes) as i32).collect())
            .unwrap();
        let gt = GroundTruthInstances::from_cloud(&cloud).unwrap();
        (cloud, gt)
    }

    #[test]
    fn zero_noise_is_identity() {
        let (cloud, gt) = scene(500, 3);
        let out = oracle_predict(&cloud, &gt, &OracleConfig::new(0.0, 0.0, 77).unwrap()).unwrap();
        assert_eq!(out.labels(), cloud.labels());
        // offsets derived from gt: shifted points land on the instance centroid
        for inst in gt.instances() {
            let s0 = out.shifted(inst.point_indices[0] as usize);
            for &i in &inst.point_indices {
                let s = out.shifted(i as usize);
                assert!((0..3).all(|k| (s[k] - s0[k]).abs() < 1e-5));
            }
        }
        let again = oracle_predict(&out.clone().with_instance_ids(gt.instance_ids().to_vec()).unwrap(), &gt, &OracleConfig::default()).unwrap();
        assert_eq!(again.offsets(), out.offsets());
    }

    #[test]
    fn full_flip_rate_flips_every_label() {
        let (cloud, gt) = scene(300, 2);
        let out = oracle_predict(&cloud, &gt, &OracleConfig::new(1.0, 0.0, 5).unwrap()).unwrap();
        for (a, b) in cloud.labels().unwrap().iter().zip(out.labels().unwrap()) {
            assert_ne!(a, b);
        }
    }

    #[test]
    fn flip_fraction_tracks_rate() {
        let (cloud, gt) = scene(10_000, 5);
        let out = oracle_predict(&cloud, &gt, &OracleConfig::new(0.1, 0.01, 42).unwrap()).unwrap();
        let flipped = cloud.labels().unwrap().iter().zip(out.labels().unwrap()).filter(|(a, b)| a != b).count();
        let frac = flipped as f64 / 10_000.0;
        assert!((frac - 0.1).abs() <= 0.01, "flip fraction {frac}");
        assert!(out.instance_ids().is_none());
    }

    #[test]
    fn deterministic_for_seed() {
        let (cloud, gt) = scene(2_000, 4);
        let cfg = OracleConfig::new(0.2, 0.05, 11).unwrap();
        let a = oracle_predict(&cloud, &gt, &cfg).unwrap();
        let b = oracle_predict(&cloud, &gt, &cfg).unwrap();
        assert_eq!(a, b);
        let c = oracle_predict(&cloud, &gt, &OracleConfig { rng_seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(OracleConfig::new(1.5, 0.0, 0).is_err());
        assert!(OracleConfig::new(0.1, -1.0, 0).is_err());
    }
}
