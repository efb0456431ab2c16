//! End-to-end runs with per-stage wall-clock timing, and the `bench` report.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cloudio::{
    oracle_predict, random_scene_spec, synth_scene, GroundTruthInstances, LabeledCloud, OracleConfig, RandomSceneParams,
};
use crate::grouping::{segment_instances, ClusterConfig, InstancePrediction};
use crate::preprocess::{preprocess, PreprocessConfig, PreprocessReport};
use crate::topview::{build_topview, Pose2D, TopViewConfig, TopViewScene};
use crate::Result;

/// Input sizes of the four scanned rooms used for the default bench.
pub const BENCH_SCENE_POINTS: [usize; 4] = [819_073, 269_273, 169_791, 258_496];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub oracle: OracleConfig,
    pub cluster: ClusterConfig,
    pub topview: TopViewConfig,
}

/// Seconds per stage: preprocessing, clustering (with scoring and NMS) and
/// top-view extraction. `total` also covers the prediction oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub total: f64,
    pub pre: f64,
    pub cl: f64,
    pub det: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Preprocessed cloud carrying predicted labels and offsets.
    pub cloud: LabeledCloud,
    /// Ground truth aligned with `cloud`, when the input had instance ids.
    pub gt: Option<GroundTruthInstances>,
    pub predictions: Vec<InstancePrediction>,
    pub topview: TopViewScene,
    pub preprocess: PreprocessReport,
    pub timing: StageSeconds,
}

/// Preprocess, predict, segment and project.
///
/// A cloud with ground-truth instance ids gets its labels and offsets from
/// the oracle; otherwise the labels and offsets it carries are used as the
/// network output.
pub fn run_pipeline(cloud: &LabeledCloud, cfg: &PipelineConfig, pose: &Pose2D) -> Result<PipelineOutput> {
    let start = Instant::now();
    let (pre_cloud, report) = preprocess(cloud, &cfg.preprocess)?;
    let t_pre = start.elapsed().as_secs_f64();

    let (predicted, gt) = if pre_cloud.instance_ids().is_some() {
        let gt = GroundTruthInstances::from_cloud(&pre_cloud)?;
        (oracle_predict(&pre_cloud, &gt, &cfg.oracle)?, Some(gt))
    } else {
        pre_cloud.require_labels()?;
        pre_cloud.require_offsets()?;
        (pre_cloud, None)
    };

    let t0 = Instant::now();
    let predictions = segment_instances(&predicted, &cfg.cluster)?;
    let t_cl = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let topview = build_topview(&predicted, &predictions, predicted.class_table(), pose, &cfg.topview)?;
    let t_det = t1.elapsed().as_secs_f64();

    Ok(PipelineOutput {
        cloud: predicted,
        gt,
        predictions,
        topview,
        preprocess: report,
        timing: StageSeconds { total: start.elapsed().as_secs_f64(), pre: t_pre, cl: t_cl, det: t_det },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scene: usize,
    pub points_in: usize,
    pub points_after_pre: usize,
    pub instances: usize,
    pub seconds: StageSeconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAverages {
    pub points_in: f64,
    pub points_after_pre: f64,
    pub seconds: StageSeconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub averages: BenchAverages,
}

impl BenchReport {
    pub fn from_rows(rows: Vec<BenchRow>) -> Self {
        let n = rows.len().max(1) as f64;
        let sum = |f: &dyn Fn(&BenchRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let averages = BenchAverages {
            points_in: sum(&|r| r.points_in as f64),
            points_after_pre: sum(&|r| r.points_after_pre as f64),
            seconds: StageSeconds {
                total: sum(&|r| r.seconds.total),
                pre: sum(&|r| r.seconds.pre),
                cl: sum(&|r| r.seconds.cl),
                det: sum(&|r| r.seconds.det),
            },
        };
        BenchReport { rows, averages }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes") + "\n"
    }

    /// Structural checks: one row per scene, stage times non-negative and
    /// within the total, averages equal to the row means.
    pub fn validate(&self, scenes: usize) -> std::result::Result<(), String> {
        if self.rows.len() != scenes {
            return Err(format!("expected {scenes} rows, found {}", self.rows.len()));
        }
        for r in &self.rows {
            let s = r.seconds;
            if [s.total, s.pre, s.cl, s.det].iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(format!("scene {}: bad timing {s:?}", r.scene));
            }
            if s.pre + s.cl + s.det > s.total * (1.0 + 1e-9) {
                return Err(format!("scene {}: stages exceed total", r.scene));
            }
            if r.points_after_pre > r.points_in {
                return Err(format!("scene {}: preprocessing grew the cloud", r.scene));
            }
        }
        let again = BenchReport::from_rows(self.rows.clone());
        if again.averages != self.averages {
            return Err("averages do not match rows".into());
        }
        Ok(())
    }
}

/// Point count of bench scene `k`.
pub fn bench_scene_points(k: usize) -> usize {
    BENCH_SCENE_POINTS[k % BENCH_SCENE_POINTS.len()]
}

/// Synthesizes `scenes` rooms (sizes cycling through [`BENCH_SCENE_POINTS`])
/// and times the pipeline on each. Synthesis is not timed.
pub fn bench(scenes: usize, seed: u64, cfg: &PipelineConfig) -> Result<BenchReport> {
    let mut rows = Vec::with_capacity(scenes);
    for k in 0..scenes {
        let params = RandomSceneParams { total_points: bench_scene_points(k), ..RandomSceneParams::default() };
        let (cloud, _) = synth_scene(&random_scene_spec(&params, seed.wrapping_add(k as u64)))?;
        let out = run_pipeline(&cloud, cfg, &Pose2D::origin())?;
        rows.push(BenchRow {
            scene: k + 1,
            points_in: cloud.len(),
            points_after_pre: out.cloud.len(),
            instances: out.predictions.len(),
            seconds: out.timing,
        });
    }
    Ok(BenchReport::from_rows(rows))
}
