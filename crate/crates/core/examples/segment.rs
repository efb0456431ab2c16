//! Dual-branch clustering, scoring and NMS on oracle predictions, written as
//! `instances.json`.
//!
//! `cargo run --release --example segment`

use hida::cloudio::{oracle_predict, random_scene_spec, synth_scene, OracleConfig, RandomSceneParams};
use hida::grouping::{instances_to_json, segment_instances_timed, ClusterConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cloud, gt) = synth_scene(&random_scene_spec(&RandomSceneParams::default(), 8))?;
    let predicted = oracle_predict(&cloud, &gt, &OracleConfig::new(0.05, 0.01, 1)?)?;
    let (preds, timing) = segment_instances_timed(&predicted, &ClusterConfig::default())?;

    println!("{} ground-truth instances, {} predicted", gt.len(), preds.len());
    println!("cluster {:.3} s, score + nms {:.3} s", timing.cluster, timing.score_nms);
    for p in &preds {
        println!("  {:<10} score {:.3}  {:>6} points", cloud.class_table().name(p.class_id), p.score, p.point_indices.len());
    }
    let json = instances_to_json(&preds, cloud.class_table());
    println!("instances.json: {} bytes", json.len());
    Ok(())
}
